#pragma once

#include <cstdint>
#include <vector>

#include "trajrl/error.hpp"

namespace trajrl {

// Network shape. The flat latent holds 6 values per frame (3 translation,
// 3 so(3) coordinates); the input concatenates the latent, a sinusoidal
// embedding of the flow time, and a learned embedding of the condition
// latent.
struct PolicyArch {
    int n_frames = 16;
    int t_embed_freqs = 4;
    int cond_embed_dim = 64;
    int hidden_width = 64;

    int latent_dim() const { return 6 * n_frames; }
    int t_embed_dim() const { return 2 * t_embed_freqs; }
    int input_dim() const { return latent_dim() + t_embed_dim() + cond_embed_dim; }

    bool operator==(const PolicyArch&) const = default;
};

// Velocity-prediction MLP with closed-form layer backprop:
//   cond_h = tanh(Wc c + bc)
//   x      = [z, t_embed, cond_h]
//   h1     = tanh(W1 x + b1)
//   h2     = tanh(W2 h1 + b2)
//   v      = W3 h2 + b3
class PolicyNet {
public:
    PolicyNet(const PolicyArch& arch, std::uint64_t init_seed);
    PolicyNet(const PolicyArch& arch, std::vector<double> params);

    const PolicyArch& arch() const { return arch_; }
    const std::vector<double>& params() const { return params_; }
    std::vector<double>& params() { return params_; }
    std::size_t param_count() const { return params_.size(); }

    static std::size_t param_count(const PolicyArch& arch);

    struct Cache {
        std::vector<double> cond_h;
        std::vector<double> x;
        std::vector<double> h1;
        std::vector<double> h2;
        std::vector<double> v;
    };

    // Predicted velocity for latent z at flow time t in [0, 1] under
    // condition latent c. The cache feeds backward().
    void forward(const std::vector<double>& z, double t, const std::vector<double>& c,
                 Cache& cache) const;

    // Accumulates d(upstream · v)/d(theta) into grad (same layout as
    // params). freeze_cond skips the condition-embedding layer.
    void backward(const std::vector<double>& c, const Cache& cache,
                  const std::vector<double>& upstream, std::vector<double>& grad,
                  bool freeze_cond = false) const;

private:
    struct Layout {
        std::size_t wc, bc, w1, b1, w2, b2, w3, b3, total;
    };
    static Layout layout(const PolicyArch& arch);

    PolicyArch arch_;
    Layout layout_;
    std::vector<double> params_;
};

} // namespace trajrl
