#include "trajrl/traj_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

namespace trajrl {

namespace {

std::string format_g12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v + 0.0);
    return buf;
}

Mat3 quaternion_to_matrix(double qx, double qy, double qz, double qw) {
    Mat3 m;
    m << 1 - 2 * (qy * qy + qz * qz), 2 * (qx * qy - qz * qw), 2 * (qx * qz + qy * qw),
         2 * (qx * qy + qz * qw), 1 - 2 * (qx * qx + qz * qz), 2 * (qy * qz - qx * qw),
         2 * (qx * qz - qy * qw), 2 * (qy * qz + qx * qw), 1 - 2 * (qx * qx + qy * qy);
    return m;
}

// Shepperd's method: branch on the largest of trace and the diagonal
// entries so the square root is always well conditioned.
void matrix_to_quaternion(const Mat3& m, double& qx, double& qy, double& qz, double& qw) {
    const double tr = m.trace();
    if (tr > m(0, 0) && tr > m(1, 1) && tr > m(2, 2)) {
        const double r = std::sqrt(1.0 + tr);
        const double s = 0.5 / r;
        qw = 0.5 * r;
        qx = (m(2, 1) - m(1, 2)) * s;
        qy = (m(0, 2) - m(2, 0)) * s;
        qz = (m(1, 0) - m(0, 1)) * s;
    } else if (m(0, 0) >= m(1, 1) && m(0, 0) >= m(2, 2)) {
        const double r = std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2));
        const double s = 0.5 / r;
        qx = 0.5 * r;
        qy = (m(0, 1) + m(1, 0)) * s;
        qz = (m(0, 2) + m(2, 0)) * s;
        qw = (m(2, 1) - m(1, 2)) * s;
    } else if (m(1, 1) >= m(2, 2)) {
        const double r = std::sqrt(1.0 - m(0, 0) + m(1, 1) - m(2, 2));
        const double s = 0.5 / r;
        qy = 0.5 * r;
        qx = (m(0, 1) + m(1, 0)) * s;
        qz = (m(1, 2) + m(2, 1)) * s;
        qw = (m(0, 2) - m(2, 0)) * s;
    } else {
        const double r = std::sqrt(1.0 - m(0, 0) - m(1, 1) + m(2, 2));
        const double s = 0.5 / r;
        qz = 0.5 * r;
        qx = (m(0, 2) + m(2, 0)) * s;
        qy = (m(1, 2) + m(2, 1)) * s;
        qw = (m(1, 0) - m(0, 1)) * s;
    }
    if (qw < 0.0) {
        qx = -qx; qy = -qy; qz = -qz; qw = -qw;
    }
}

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& why) {
    std::ostringstream os;
    os << "trajectory line " << line_no << ": " << why;
    raise(ErrorCode::parse, os.str());
}

} // namespace

Trajectory parse_trajectory(std::istream& in) {
    Trajectory traj;
    std::string line;
    std::size_t line_no = 0;
    double prev_ts = 0.0;
    bool have_prev = false;
    double first_dt = -1.0;

    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream fields(line);
        double ts, tx, ty, tz, qx, qy, qz, qw;
        if (!(fields >> ts >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
            parse_fail(line_no, "expected 8 fields `timestamp tx ty tz qx qy qz qw`");
        }
        std::string extra;
        if (fields >> extra) {
            parse_fail(line_no, "trailing field `" + extra + "`");
        }
        for (double v : {ts, tx, ty, tz, qx, qy, qz, qw}) {
            if (!std::isfinite(v)) parse_fail(line_no, "non-finite value");
        }

        const double norm = std::sqrt(qx * qx + qy * qy + qz * qz + qw * qw);
        if (std::fabs(norm - 1.0) > 1e-3) {
            std::ostringstream os;
            os << "quaternion norm " << norm << " departs from 1 by more than 1e-3";
            parse_fail(line_no, os.str());
        }
        qx /= norm; qy /= norm; qz /= norm; qw /= norm;

        if (have_prev && !(ts > prev_ts)) {
            std::ostringstream os;
            os << "timestamps must be strictly increasing (line " << line_no << ")";
            raise(ErrorCode::validation, os.str());
        }
        if (have_prev && first_dt < 0.0) first_dt = ts - prev_ts;
        prev_ts = ts;
        have_prev = true;

        Pose p;
        p.rotation = Rotation::from_matrix(quaternion_to_matrix(qx, qy, qz, qw), 1e-6);
        p.translation = Vec3(tx, ty, tz);
        traj.poses.push_back(p);
    }

    if (traj.poses.size() < 2) {
        raise(ErrorCode::validation, "trajectory file must contain at least 2 records");
    }
    if (first_dt > 0.0) traj.frame_rate = 1.0 / first_dt;
    traj.validate();
    return traj;
}

Trajectory parse_trajectory(const std::string& text) {
    std::istringstream in(text);
    return parse_trajectory(in);
}

Trajectory load_trajectory(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::io, "cannot open trajectory file: " + path);
    return parse_trajectory(in);
}

std::string serialize_trajectory(const Trajectory& t) {
    t.validate();
    std::string out;
    out.reserve(t.poses.size() * 96);
    for (std::size_t i = 0; i < t.poses.size(); ++i) {
        double qx, qy, qz, qw;
        matrix_to_quaternion(t.poses[i].rotation.matrix(), qx, qy, qz, qw);
        const Vec3& tr = t.poses[i].translation;
        out += format_g12(static_cast<double>(i) / t.frame_rate);
        for (double v : {tr.x(), tr.y(), tr.z(), qx, qy, qz, qw}) {
            out += ' ';
            out += format_g12(v);
        }
        out += '\n';
    }
    return out;
}

void save_trajectory(const Trajectory& t, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorCode::io, "cannot open for writing: " + path);
    out << serialize_trajectory(t);
    if (!out) raise(ErrorCode::io, "write failed: " + path);
}

// ---------------------------------------------------------------------------
// RunConfig
// ---------------------------------------------------------------------------

void RescaleSpec::validate() const {
    auto bad = [](const std::string& what) { raise(ErrorCode::config, what); };
    if (!(sigma_trans > 0)) bad("rescale_sigma_trans must be > 0");
    if (!(sigma_rot > 0)) bad("rescale_sigma_rot must be > 0");
    if (!(min_trans > 0)) bad("rescale_min_trans must be > 0");
    if (!(min_rot > 0)) bad("rescale_min_rot must be > 0");
    if (!(min_trans < max_trans)) bad("rescale_min_trans must be < rescale_max_trans");
    if (!(min_rot < max_rot)) bad("rescale_min_rot must be < rescale_max_rot");
    if (!(eps > 0)) bad("rescale_eps must be > 0");
}

void RunConfig::validate() const {
    auto bad = [](const std::string& what) { raise(ErrorCode::config, what); };
    if (n_frames < 2) bad("n_frames must be >= 2");
    if (!(frame_rate > 0)) bad("frame_rate must be > 0");
    if (flow_steps < 1) bad("flow_steps must be >= 1");
    if (group_size < 2) bad("group_size must be >= 2");
    if (!(sde_eta >= 0)) bad("sde_eta must be >= 0");
    if (window_size < 1 || window_size > flow_steps) {
        bad("window_size must satisfy 1 <= window_size <= flow_steps");
    }
    if (window_shift_period < 1) bad("window_shift_period must be >= 1");
    if (!(learning_rate > 0)) bad("learning_rate must be > 0");
    if (iterations < 0) bad("iterations must be >= 0");
    if (checkpoint_period < 0) bad("checkpoint_period must be >= 0");
    if (hidden_width < 1) bad("hidden_width must be >= 1");
    if (t_embed_freqs < 1) bad("t_embed_freqs must be >= 1");
    if (cond_embed_dim < 1) bad("cond_embed_dim must be >= 1");
    if (pretrain_epochs < 1) bad("pretrain_epochs must be >= 1");
    if (pretrain_batch < 1) bad("pretrain_batch must be >= 1");
    if (!(pretrain_lr > 0)) bad("pretrain_lr must be > 0");
    if (!(corpus_scale_min > 0)) bad("corpus_scale_min must be > 0");
    if (!(corpus_scale_min <= corpus_scale_max)) {
        bad("corpus_scale_min must be <= corpus_scale_max");
    }
    const double lsum = std::fabs(lambda_rot) + std::fabs(lambda_trans) +
                        std::fabs(lambda_vis) + std::fabs(lambda_mot) + std::fabs(lambda_hps);
    for (double l : {lambda_rot, lambda_trans, lambda_vis, lambda_mot, lambda_hps}) {
        if (!std::isfinite(l)) bad("reward weights must be finite");
    }
    if (!(lsum > 0)) bad("at least one reward weight must be nonzero");
    if (!(eps_std > 0)) bad("eps_std must be > 0");
    if (!(eps_clip > 0 && eps_clip < 1)) bad("eps_clip must lie in (0, 1)");
    if (!(est_sigma_trans >= 0)) bad("est_sigma_trans must be >= 0");
    if (!(est_sigma_rot >= 0)) bad("est_sigma_rot must be >= 0");
    rescale.validate();
}

namespace {

struct KeyEntry {
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

[[noreturn]] void config_fail(const std::string& key, const std::string& why) {
    raise(ErrorCode::config, "config key `" + key + "`: " + why);
}

double to_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double d;
    try {
        d = std::stod(v, &pos);
    } catch (const std::exception&) {
        config_fail(key, "not a number: `" + v + "`");
    }
    if (pos != v.size()) config_fail(key, "trailing characters in `" + v + "`");
    if (!std::isfinite(d)) config_fail(key, "value must be finite");
    return d;
}

long long to_int(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    long long i;
    try {
        i = std::stoll(v, &pos);
    } catch (const std::exception&) {
        config_fail(key, "not an integer: `" + v + "`");
    }
    if (pos != v.size()) config_fail(key, "trailing characters in `" + v + "`");
    return i;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    config_fail(key, "expected true/false, got `" + v + "`");
}

const std::map<std::string, KeyEntry>& key_table() {
    static const std::map<std::string, KeyEntry> table = [] {
        std::map<std::string, KeyEntry> t;
        auto add_int = [&t](const std::string& key, int RunConfig::*field) {
            t[key] = {
                [key, field](RunConfig& c, const std::string& v) {
                    c.*field = static_cast<int>(to_int(key, v));
                },
                [field](const RunConfig& c) { return std::to_string(c.*field); }};
        };
        auto add_double = [&t](const std::string& key, double RunConfig::*field) {
            t[key] = {
                [key, field](RunConfig& c, const std::string& v) {
                    c.*field = to_double(key, v);
                },
                [field](const RunConfig& c) { return format_g12(c.*field); }};
        };
        auto add_rescale = [&t](const std::string& key, double RescaleSpec::*field) {
            t[key] = {
                [key, field](RunConfig& c, const std::string& v) {
                    c.rescale.*field = to_double(key, v);
                },
                [field](const RunConfig& c) { return format_g12(c.rescale.*field); }};
        };

        add_int("n_frames", &RunConfig::n_frames);
        add_double("frame_rate", &RunConfig::frame_rate);
        add_int("flow_steps", &RunConfig::flow_steps);
        add_int("group_size", &RunConfig::group_size);
        add_double("sde_eta", &RunConfig::sde_eta);
        add_int("window_size", &RunConfig::window_size);
        add_int("window_shift_period", &RunConfig::window_shift_period);
        add_double("learning_rate", &RunConfig::learning_rate);
        add_int("iterations", &RunConfig::iterations);
        add_int("checkpoint_period", &RunConfig::checkpoint_period);
        add_int("hidden_width", &RunConfig::hidden_width);
        add_int("t_embed_freqs", &RunConfig::t_embed_freqs);
        add_int("cond_embed_dim", &RunConfig::cond_embed_dim);
        add_int("pretrain_epochs", &RunConfig::pretrain_epochs);
        add_int("pretrain_batch", &RunConfig::pretrain_batch);
        add_double("pretrain_lr", &RunConfig::pretrain_lr);
        add_double("corpus_scale_min", &RunConfig::corpus_scale_min);
        add_double("corpus_scale_max", &RunConfig::corpus_scale_max);
        add_double("lambda_rot", &RunConfig::lambda_rot);
        add_double("lambda_trans", &RunConfig::lambda_trans);
        add_double("lambda_vis", &RunConfig::lambda_vis);
        add_double("lambda_mot", &RunConfig::lambda_mot);
        add_double("lambda_hps", &RunConfig::lambda_hps);
        add_double("eps_std", &RunConfig::eps_std);
        add_double("eps_clip", &RunConfig::eps_clip);
        add_double("est_sigma_trans", &RunConfig::est_sigma_trans);
        add_double("est_sigma_rot", &RunConfig::est_sigma_rot);
        add_rescale("rescale_mu_trans", &RescaleSpec::mu_trans);
        add_rescale("rescale_sigma_trans", &RescaleSpec::sigma_trans);
        add_rescale("rescale_min_trans", &RescaleSpec::min_trans);
        add_rescale("rescale_max_trans", &RescaleSpec::max_trans);
        add_rescale("rescale_mu_rot", &RescaleSpec::mu_rot);
        add_rescale("rescale_sigma_rot", &RescaleSpec::sigma_rot);
        add_rescale("rescale_min_rot", &RescaleSpec::min_rot);
        add_rescale("rescale_max_rot", &RescaleSpec::max_rot);
        add_rescale("rescale_eps", &RescaleSpec::eps);

        t["seed"] = {
            [](RunConfig& c, const std::string& v) {
                const long long s = to_int("seed", v);
                if (s < 0) config_fail("seed", "must be >= 0");
                c.seed = static_cast<std::uint64_t>(s);
            },
            [](const RunConfig& c) { return std::to_string(c.seed); }};
        t["freeze_cond_embed"] = {
            [](RunConfig& c, const std::string& v) {
                c.freeze_cond_embed = to_bool("freeze_cond_embed", v);
            },
            [](const RunConfig& c) {
                return std::string(c.freeze_cond_embed ? "true" : "false");
            }};
        t["weight_schedule"] = {
            [](RunConfig& c, const std::string& v) {
                c.weight_schedule = parse_weight_schedule(v);
            },
            [](const RunConfig& c) {
                switch (c.weight_schedule) {
                    case WeightSchedule::linear: return std::string("linear");
                    case WeightSchedule::quadratic: return std::string("quadratic");
                    default: return std::string("uniform");
                }
            }};
        t["std_mode"] = {
            [](RunConfig& c, const std::string& v) {
                if (v == "group") c.std_mode = StdMode::group;
                else if (v == "batch-max") c.std_mode = StdMode::batch_max;
                else config_fail("std_mode", "expected group or batch-max");
            },
            [](const RunConfig& c) {
                return std::string(c.std_mode == StdMode::group ? "group" : "batch-max");
            }};
        t["timestep_schedule"] = {
            [](RunConfig& c, const std::string& v) {
                if (v == "uniform") c.timestep_schedule = TimestepSchedule::uniform;
                else if (v == "noise-proportional") {
                    c.timestep_schedule = TimestepSchedule::noise_proportional;
                } else {
                    config_fail("timestep_schedule", "expected uniform or noise-proportional");
                }
            },
            [](const RunConfig& c) {
                return std::string(c.timestep_schedule == TimestepSchedule::uniform
                                       ? "uniform"
                                       : "noise-proportional");
            }};
        return t;
    }();
    return table;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

WeightSchedule parse_weight_schedule(const std::string& name) {
    if (name == "linear") return WeightSchedule::linear;
    if (name == "quadratic") return WeightSchedule::quadratic;
    if (name == "uniform") return WeightSchedule::uniform;
    config_fail("weight_schedule", "expected linear, quadratic or uniform, got `" + name + "`");
}

RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            std::ostringstream os;
            os << "config line " << line_no << ": expected `key = value`";
            raise(ErrorCode::config, os.str());
        }
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        const auto it = key_table().find(key);
        if (it == key_table().end()) {
            raise(ErrorCode::config, "unknown config key `" + key + "`");
        }
        if (!seen.insert(key).second) {
            raise(ErrorCode::config, "duplicate config key `" + key + "`");
        }
        it->second.set(cfg, value);
    }
    cfg.validate();
    return cfg;
}

RunConfig parse_config(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::io, "cannot open config file: " + path);
    return parse_config(in);
}

std::string RunConfig::canonical_text() const {
    std::string out;
    for (const auto& [key, entry] : key_table()) {
        out += key;
        out += " = ";
        out += entry.get(*this);
        out += '\n';
    }
    return out;
}

std::uint64_t RunConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_text()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string emit_metrics(const MetricsRecord& record) {
    nlohmann::ordered_json j;
    j["iter"] = record.iteration;
    j["window_start"] = record.window_start;
    nlohmann::ordered_json rewards;
    for (const auto& [channel, mean] : record.reward_mean) rewards[channel] = mean;
    j["reward_mean"] = std::move(rewards);
    j["adv_mean"] = record.adv_mean;
    j["surrogate"] = record.surrogate;
    j["grad_norm"] = record.grad_norm;
    j["wall_s"] = record.wall_s;
    return j.dump();
}

} // namespace trajrl
