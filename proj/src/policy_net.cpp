#include "trajrl/policy_net.hpp"

#include <cmath>

#include "trajrl/rng.hpp"

namespace trajrl {

namespace {

constexpr double kPi = 3.14159265358979323846;

// y = W x + b, W row-major (rows x cols).
void affine(const double* w, const double* b, const double* x, double* y,
            int rows, int cols) {
    for (int r = 0; r < rows; ++r) {
        double acc = b[r];
        const double* wr = w + static_cast<std::size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) acc += wr[c] * x[c];
        y[r] = acc;
    }
}

// Given da = dL/d(Wx+b), accumulates dW += da xᵀ, db += da and writes
// dx = Wᵀ da when dx is non-null.
void affine_backward(const double* w, const double* x, const double* da,
                     double* dw, double* db, double* dx, int rows, int cols) {
    if (dx) {
        for (int c = 0; c < cols; ++c) dx[c] = 0.0;
    }
    for (int r = 0; r < rows; ++r) {
        const double g = da[r];
        const double* wr = w + static_cast<std::size_t>(r) * cols;
        double* dwr = dw + static_cast<std::size_t>(r) * cols;
        db[r] += g;
        for (int c = 0; c < cols; ++c) {
            dwr[c] += g * x[c];
            if (dx) dx[c] += wr[c] * g;
        }
    }
}

void tanh_inplace(std::vector<double>& v) {
    for (double& x : v) x = std::tanh(x);
}

} // namespace

PolicyNet::Layout PolicyNet::layout(const PolicyArch& arch) {
    const std::size_t d = arch.latent_dim();
    const std::size_t e = arch.cond_embed_dim;
    const std::size_t h = arch.hidden_width;
    const std::size_t in = arch.input_dim();
    Layout l{};
    l.wc = 0;
    l.bc = l.wc + e * d;
    l.w1 = l.bc + e;
    l.b1 = l.w1 + h * in;
    l.w2 = l.b1 + h;
    l.b2 = l.w2 + h * h;
    l.w3 = l.b2 + h;
    l.b3 = l.w3 + d * h;
    l.total = l.b3 + d;
    return l;
}

std::size_t PolicyNet::param_count(const PolicyArch& arch) {
    return layout(arch).total;
}

PolicyNet::PolicyNet(const PolicyArch& arch, std::uint64_t init_seed)
    : arch_(arch), layout_(layout(arch)), params_(layout_.total, 0.0) {
    Rng rng(init_seed);
    auto xavier = [&rng](double* w, int rows, int cols) {
        const double s = std::sqrt(6.0 / (rows + cols));
        for (std::size_t i = 0; i < static_cast<std::size_t>(rows) * cols; ++i) {
            w[i] = rng.uniform(-s, s);
        }
    };
    xavier(params_.data() + layout_.wc, arch.cond_embed_dim, arch.latent_dim());
    xavier(params_.data() + layout_.w1, arch.hidden_width, arch.input_dim());
    xavier(params_.data() + layout_.w2, arch.hidden_width, arch.hidden_width);
    xavier(params_.data() + layout_.w3, arch.latent_dim(), arch.hidden_width);
}

PolicyNet::PolicyNet(const PolicyArch& arch, std::vector<double> params)
    : arch_(arch), layout_(layout(arch)), params_(std::move(params)) {
    if (params_.size() != layout_.total) {
        raise(ErrorCode::invalid_argument, "parameter vector does not match architecture");
    }
}

void PolicyNet::forward(const std::vector<double>& z, double t,
                        const std::vector<double>& c, Cache& cache) const {
    const int d = arch_.latent_dim();
    const int e = arch_.cond_embed_dim;
    const int h = arch_.hidden_width;
    const int in = arch_.input_dim();
    if (static_cast<int>(z.size()) != d || static_cast<int>(c.size()) != d) {
        raise(ErrorCode::invalid_argument, "latent dimension mismatch");
    }

    const double* p = params_.data();
    cache.cond_h.resize(e);
    affine(p + layout_.wc, p + layout_.bc, c.data(), cache.cond_h.data(), e, d);
    tanh_inplace(cache.cond_h);

    cache.x.resize(in);
    std::copy(z.begin(), z.end(), cache.x.begin());
    for (int k = 0; k < arch_.t_embed_freqs; ++k) {
        const double f = kPi * std::ldexp(1.0, k) * t;
        cache.x[d + 2 * k] = std::sin(f);
        cache.x[d + 2 * k + 1] = std::cos(f);
    }
    std::copy(cache.cond_h.begin(), cache.cond_h.end(),
              cache.x.begin() + d + arch_.t_embed_dim());

    cache.h1.resize(h);
    affine(p + layout_.w1, p + layout_.b1, cache.x.data(), cache.h1.data(), h, in);
    tanh_inplace(cache.h1);

    cache.h2.resize(h);
    affine(p + layout_.w2, p + layout_.b2, cache.h1.data(), cache.h2.data(), h, h);
    tanh_inplace(cache.h2);

    cache.v.resize(d);
    affine(p + layout_.w3, p + layout_.b3, cache.h2.data(), cache.v.data(), d, h);
}

void PolicyNet::backward(const std::vector<double>& c, const Cache& cache,
                         const std::vector<double>& upstream, std::vector<double>& grad,
                         bool freeze_cond) const {
    const int d = arch_.latent_dim();
    const int e = arch_.cond_embed_dim;
    const int h = arch_.hidden_width;
    const int in = arch_.input_dim();
    if (grad.size() != params_.size()) grad.resize(params_.size(), 0.0);
    if (static_cast<int>(upstream.size()) != d) {
        raise(ErrorCode::invalid_argument, "upstream dimension mismatch");
    }

    const double* p = params_.data();
    double* g = grad.data();

    std::vector<double> dh2(h);
    affine_backward(p + layout_.w3, cache.h2.data(), upstream.data(),
                    g + layout_.w3, g + layout_.b3, dh2.data(), d, h);
    for (int i = 0; i < h; ++i) dh2[i] *= 1.0 - cache.h2[i] * cache.h2[i];

    std::vector<double> dh1(h);
    affine_backward(p + layout_.w2, cache.h1.data(), dh2.data(),
                    g + layout_.w2, g + layout_.b2, dh1.data(), h, h);
    for (int i = 0; i < h; ++i) dh1[i] *= 1.0 - cache.h1[i] * cache.h1[i];

    std::vector<double> dx(in);
    affine_backward(p + layout_.w1, cache.x.data(), dh1.data(),
                    g + layout_.w1, g + layout_.b1, dx.data(), h, in);

    if (!freeze_cond) {
        std::vector<double> dcond(e);
        const int off = d + arch_.t_embed_dim();
        for (int i = 0; i < e; ++i) {
            dcond[i] = dx[off + i] * (1.0 - cache.cond_h[i] * cache.cond_h[i]);
        }
        affine_backward(p + layout_.wc, c.data(), dcond.data(),
                        g + layout_.wc, g + layout_.bc, nullptr, e, d);
    }
}

} // namespace trajrl
