// Experiment runner. Parses a JSON config describing one experiment kind,
// wires the library pipeline, and writes deterministic CSV/JSON results.
//
// Exit codes: 0 success, 2 config/schema error, 3 resource cap exceeded,
// 4 internal invariant breach.

#include <atomic>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rps/boolean_function.hpp"
#include "rps/density.hpp"
#include "rps/device.hpp"
#include "rps/extrapolation.hpp"
#include "rps/fq.hpp"
#include "rps/mf_hypergraph.hpp"
#include "rps/mf_spectral.hpp"
#include "rps/noise.hpp"
#include "rps/rng.hpp"
#include "rps/shadows.hpp"

namespace {

using nlohmann::json;
using namespace rps;

constexpr int kExitSchema = 2;
constexpr int kExitResource = 3;
constexpr int kExitInvariant = 4;

struct ConfigError : std::runtime_error {
    std::string field;
    ConfigError(std::string f, const std::string& msg)
        : std::runtime_error(f + ": " + msg), field(std::move(f)) {}
};

struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Config access helpers: every extraction failure names the field path.
// ---------------------------------------------------------------------------

const json& need(const json& j, const std::string& path, const std::string& key) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(path + "." + key, "missing required field");
    return j.at(key);
}

double need_number(const json& j, const std::string& path, const std::string& key) {
    const json& v = need(j, path, key);
    if (!v.is_number()) throw ConfigError(path + "." + key, "must be a number");
    return v.get<double>();
}

double opt_number(const json& j, const std::string& path, const std::string& key, double def) {
    if (!j.is_object() || !j.contains(key)) return def;
    return need_number(j, path, key);
}

std::int64_t need_int(const json& j, const std::string& path, const std::string& key) {
    const json& v = need(j, path, key);
    if (!v.is_number_integer()) throw ConfigError(path + "." + key, "must be an integer");
    return v.get<std::int64_t>();
}

std::int64_t opt_int(const json& j, const std::string& path, const std::string& key, std::int64_t def) {
    if (!j.is_object() || !j.contains(key)) return def;
    return need_int(j, path, key);
}

bool opt_bool(const json& j, const std::string& path, const std::string& key, bool def) {
    if (!j.is_object() || !j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_boolean()) throw ConfigError(path + "." + key, "must be a boolean");
    return v.get<bool>();
}

std::string need_string(const json& j, const std::string& path, const std::string& key) {
    const json& v = need(j, path, key);
    if (!v.is_string()) throw ConfigError(path + "." + key, "must be a string");
    return v.get<std::string>();
}

std::vector<int> need_int_list(const json& j, const std::string& path, const std::string& key,
                               int lo, int hi) {
    const json& v = need(j, path, key);
    if (!v.is_array() || v.empty()) throw ConfigError(path + "." + key, "must be a nonempty array");
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string p = path + "." + key + "[" + std::to_string(i) + "]";
        if (!v[i].is_number_integer()) throw ConfigError(p, "must be an integer");
        int x = v[i].get<int>();
        if (x < lo || x > hi)
            throw ConfigError(p, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        out.push_back(x);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Shared config pieces
// ---------------------------------------------------------------------------

std::vector<NoiseChannelSpec> parse_channels(const json& cfg, const std::string& path) {
    const json& arr = need(cfg, path, "channels");
    if (!arr.is_array() || arr.empty()) throw ConfigError(path + ".channels", "must be a nonempty array");
    std::vector<NoiseChannelSpec> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string p = path + ".channels[" + std::to_string(i) + "]";
        std::string kind = need_string(arr[i], p, "kind");
        ChannelKind ck;
        try {
            ck = channel_from_name(kind);
        } catch (const std::exception&) {
            throw ConfigError(p + ".kind", "unknown channel '" + kind + "'");
        }
        double eps = need_number(arr[i], p, "eps_p");
        if (!(eps >= 0.0 && eps < 1.0)) throw ConfigError(p + ".eps_p", "must be in [0, 1)");
        out.emplace_back(ck, eps);
    }
    return out;
}

struct AlphaRule {
    std::string rule; // "full" | "half" | "explicit"
    Bits explicit_mask = 0;

    Concept make(int n_q) const {
        const Bits top = Bits(1) << (n_q - 1);
        if (rule == "full") return Concept(n_q, (Bits(1) << n_q) - 1);
        if (rule == "half") {
            int w = std::max(1, n_q / 2);
            Bits mask = top | ((Bits(1) << (w - 1)) - 1);
            return Concept(n_q, mask);
        }
        if (explicit_mask >= (Bits(1) << n_q) || !(explicit_mask & top))
            throw ConfigError("config.alpha_rule.alpha",
                              "explicit alpha must fit n_q and include the top qubit (n_q=" +
                                  std::to_string(n_q) + ")");
        return Concept(n_q, explicit_mask);
    }

    std::string label() const {
        if (rule == "explicit") return "explicit:" + std::to_string(std::uint64_t(explicit_mask));
        return rule;
    }
};

AlphaRule parse_alpha_rule(const json& j, const std::string& path) {
    AlphaRule r;
    r.rule = need_string(j, path, "rule");
    if (r.rule != "full" && r.rule != "half" && r.rule != "explicit")
        throw ConfigError(path + ".rule", "must be one of full|half|explicit");
    if (r.rule == "explicit") {
        std::int64_t a = need_int(j, path, "alpha");
        if (a <= 0) throw ConfigError(path + ".alpha", "must be a positive bitmask");
        r.explicit_mask = Bits(a);
    }
    return r;
}

std::vector<AlphaRule> parse_alpha_rules(const json& cfg, const std::string& path) {
    if (!cfg.contains("alpha_rules")) return {AlphaRule{"full", 0}};
    const json& arr = cfg.at("alpha_rules");
    if (!arr.is_array() || arr.empty()) throw ConfigError(path + ".alpha_rules", "must be a nonempty array");
    std::vector<AlphaRule> out;
    for (std::size_t i = 0; i < arr.size(); ++i)
        out.push_back(parse_alpha_rule(arr[i], path + ".alpha_rules[" + std::to_string(i) + "]"));
    return out;
}

DeviceModel parse_device(const json& v, const std::string& path) {
    if (v.is_string()) {
        std::string name = v.get<std::string>();
        if (name == "ideal") return DeviceModel{};
        try {
            return device_preset(name);
        } catch (const std::exception&) {
            throw ConfigError(path, "unknown device preset '" + name + "'");
        }
    }
    if (!v.is_object()) throw ConfigError(path, "must be a preset name or an inline device object");
    DeviceModel d;
    d.name = need_string(v, path, "name");
    std::string conn = need_string(v, path, "connectivity");
    if (conn == "all-to-all") d.connectivity = Connectivity::all_to_all;
    else if (conn == "square-lattice") d.connectivity = Connectivity::square_lattice;
    else throw ConfigError(path + ".connectivity", "must be all-to-all|square-lattice");
    d.f_1q = need_number(v, path, "f_1q");
    d.f_2q = need_number(v, path, "f_2q");
    if (!(d.f_1q > 0.0 && d.f_1q <= 1.0)) throw ConfigError(path + ".f_1q", "must be in (0, 1]");
    if (!(d.f_2q > 0.0 && d.f_2q <= 1.0)) throw ConfigError(path + ".f_2q", "must be in (0, 1]");
    std::string idle = need_string(v, path, "idle_kind");
    if (idle == "t1") d.idle_kind = IdleKind::t1_dominated;
    else if (idle == "t2") d.idle_kind = IdleKind::t2_dominated;
    else throw ConfigError(path + ".idle_kind", "must be t1|t2");
    d.quality = need_number(v, path, "quality");
    if (!(d.quality > 0.0)) throw ConfigError(path + ".quality", "must be positive");
    d.eps_r = need_number(v, path, "eps_r");
    if (!(d.eps_r >= 0.0 && d.eps_r <= 0.5)) throw ConfigError(path + ".eps_r", "must be in [0, 1/2]");
    d.t_1q = opt_number(v, path, "t_1q", 0.1);
    d.t_2q = opt_number(v, path, "t_2q", 1.0);
    return d;
}

std::vector<double> parse_k_grid(const json& cfg, const std::string& path) {
    std::vector<double> ks;
    if (cfg.contains("k_values")) {
        const json& arr = cfg.at("k_values");
        if (!arr.is_array() || arr.empty()) throw ConfigError(path + ".k_values", "must be a nonempty array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            if (!arr[i].is_number())
                throw ConfigError(path + ".k_values[" + std::to_string(i) + "]", "must be a number");
            ks.push_back(arr[i].get<double>());
        }
    } else {
        const json& g = need(cfg, path, "k_grid");
        double lo = need_number(g, path + ".k_grid", "min");
        double hi = need_number(g, path + ".k_grid", "max");
        double step = need_number(g, path + ".k_grid", "step");
        if (!(step > 0.0) || !(hi >= lo)) throw ConfigError(path + ".k_grid", "need max >= min and step > 0");
        for (double k = lo; k <= hi + 1e-12; k += step) ks.push_back(k);
    }
    for (std::size_t i = 0; i + 1 < ks.size(); ++i)
        if (!(ks[i] < ks[i + 1])) throw ConfigError(path + ".k_values", "must be strictly increasing");
    if (ks.front() <= 0.0) throw ConfigError(path + ".k_values", "k must be positive");
    return ks;
}

// ---------------------------------------------------------------------------
// Plumbing: hashing, formatting, output, parallel map
// ---------------------------------------------------------------------------

std::string config_hash(const json& cfg) {
    // FNV-1a over the canonical dump (object keys are stored sorted).
    std::string s = cfg.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

struct CsvWriter {
    std::ofstream out;
    CsvWriter(const std::filesystem::path& p, const std::string& header) : out(p) {
        if (!out) throw std::runtime_error("cannot open output file " + p.string());
        out << header << "\n";
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
        out << "\n";
        out.flush(); // partial results survive interruption
    }
};

template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    threads = std::max(1, std::min<int>(threads, int(n)));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mtx;
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mtx);
                if (!err) err = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

struct RunContext {
    std::filesystem::path out_dir;
    std::string hash;
    std::uint64_t seed = 0;
    int threads = 1;
    int max_qubits = kMaxQubitsDense;
    double cycle_time_s = 1e-6;
    bool dry_run = false;
    std::filesystem::path config_dir;
};

void check_qubit_cap(int n_q, const RunContext& rc) {
    if (n_q > rc.max_qubits)
        throw ResourceError("n_q=" + std::to_string(n_q) + " exceeds the qubit cap " +
                            std::to_string(rc.max_qubits));
}

void write_json(const RunContext& rc, const std::string& name, json j) {
    j["schema_version"] = 1;
    j["config_hash"] = rc.hash;
    j["tool"] = "rps_cli/1.0";
    std::ofstream out(rc.out_dir / name);
    if (!out) throw std::runtime_error("cannot open output file " + name);
    out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Kind: fq-accuracy
// ---------------------------------------------------------------------------

int run_fq_accuracy(const json& cfg, const RunContext& rc) {
    auto n_qs = need_int_list(cfg, "config", "n_q", 1, 64);
    auto channels = parse_channels(cfg, "config");
    auto rules = parse_alpha_rules(cfg, "config");
    const json& devs = need(cfg, "config", "devices");
    if (!devs.is_array() || devs.empty()) throw ConfigError("config.devices", "must be a nonempty array");
    std::vector<DeviceModel> devices;
    for (std::size_t i = 0; i < devs.size(); ++i)
        devices.push_back(parse_device(devs[i], "config.devices[" + std::to_string(i) + "]"));

    const json& bj = need(cfg, "config", "budget");
    SimulationBudget budget;
    budget.n_f = std::size_t(need_int(bj, "config.budget", "n_f"));
    budget.n_mcs = std::size_t(need_int(bj, "config.budget", "n_mcs"));
    budget.n_shots = std::size_t(need_int(bj, "config.budget", "n_shots"));
    if (budget.n_f < 1 || budget.n_mcs < 1 || budget.n_shots < 1)
        throw ConfigError("config.budget", "all budget entries must be >= 1");

    ProtocolOptions opts;
    opts.circuit_noise = opt_bool(cfg, "config", "circuit_noise", true);
    opts.readout_noise = opt_bool(cfg, "config", "readout_noise", true);
    opts.route_trials = int(opt_int(cfg, "config", "route_trials", 20));
    opts.max_qubits = rc.max_qubits;

    for (int nq : n_qs) check_qubit_cap(nq, rc);
    for (const auto& rule : rules)
        for (int nq : n_qs) rule.make(nq); // explicit masks must fit every size
    double work = double(budget.n_f) * double(budget.n_mcs) * double(budget.n_shots);
    if (work > 4e9) throw ResourceError("budget product n_f*n_mcs*n_shots exceeds 4e9 shots");
    if (rc.dry_run) return 0;

    struct Row {
        std::string device, channel, alpha;
        double eps_p = 0.0;
        int n_q = 0, weight = 0;
        AccuracyEstimate est;
    };
    std::vector<Row> rows;
    for (const auto& dev : devices)
        for (const auto& ch : channels)
            for (const auto& rule : rules)
                for (int nq : n_qs) {
                    Row r;
                    r.device = dev.name;
                    r.channel = channel_name(ch.kind);
                    r.eps_p = ch.eps_p;
                    r.alpha = rule.label();
                    r.n_q = nq;
                    rows.push_back(r);
                }

    RandomSource root(rc.seed);
    std::vector<std::tuple<const DeviceModel*, const NoiseChannelSpec*, const AlphaRule*>> wiring;
    for (const auto& dev : devices)
        for (const auto& ch : channels)
            for (const auto& rule : rules)
                for (std::size_t i = 0; i < n_qs.size(); ++i) wiring.emplace_back(&dev, &ch, &rule);

    parallel_for(rows.size(), rc.threads, [&](std::size_t i) {
        auto [dev, ch, rule] = wiring[i];
        Concept alpha = rule->make(rows[i].n_q);
        rows[i].weight = hamming_weight(alpha.alpha);
        rows[i].est = simulate_protocol(rows[i].n_q, alpha, *ch, *dev, budget, root.sub(i), opts);
    });

    CsvWriter csv(rc.out_dir / "fq_accuracy.csv",
                  "config_hash,device,channel,eps_p,alpha_rule,alpha_weight,n_q,accuracy,std_error,"
                  "mean_unique_states");
    CsvWriter fig2(rc.out_dir / "fig2.csv",
                   "config_hash,device,channel,eps_p,alpha_rule,n_q,accuracy,observed_or_extrapolated");
    json jr = json::array();
    for (const auto& r : rows) {
        csv.row({rc.hash, r.device, r.channel, fmt(r.eps_p), r.alpha, std::to_string(r.weight),
                 std::to_string(r.n_q), fmt(r.est.accuracy), fmt(r.est.std_error),
                 fmt(r.est.mean_unique_states)});
        fig2.row({rc.hash, r.device, r.channel, fmt(r.eps_p), r.alpha, std::to_string(r.n_q),
                  fmt(r.est.accuracy), "observed"});
        jr.push_back({{"device", r.device},
                      {"channel", r.channel},
                      {"eps_p", r.eps_p},
                      {"alpha_rule", r.alpha},
                      {"alpha_weight", r.weight},
                      {"n_q", r.n_q},
                      {"accuracy", r.est.accuracy},
                      {"std_error", r.est.std_error}});
    }
    write_json(rc, "fq_accuracy.json", {{"kind", "fq-accuracy"}, {"rows", jr}});
    return 0;
}

// ---------------------------------------------------------------------------
// Kind: mf-run
// ---------------------------------------------------------------------------

struct MfMethodSpec {
    std::string name; // single-element | local-sum | global-sum | eigenshadow | hypergraph
};

std::vector<MfMethodSpec> parse_methods(const json& cfg, const std::string& path) {
    const json& arr = need(cfg, path, "methods");
    if (!arr.is_array() || arr.empty()) throw ConfigError(path + ".methods", "must be a nonempty array");
    std::vector<MfMethodSpec> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string p = path + ".methods[" + std::to_string(i) + "]";
        if (!arr[i].is_string()) throw ConfigError(p, "must be a string");
        std::string m = arr[i].get<std::string>();
        if (m != "single-element" && m != "local-sum" && m != "global-sum" && m != "eigenshadow" &&
            m != "hypergraph")
            throw ConfigError(p, "unknown method '" + m + "'");
        out.push_back({m});
    }
    return out;
}

// Accuracy of one method at one (n_q, k) point: fresh random (f, y) per trial.
double mf_point_accuracy(const std::string& method, const NoiseChannelSpec& prep, int n_q,
                         double k, const AlphaRule& rule, int trials, RandomSource rng) {
    Concept alpha = rule.make(n_q);
    const double log2nc = k * double(n_q);
    if (log2nc > 40.0) throw ResourceError("n_c = 2^" + fmt(log2nc) + " exceeds the 2^40 copy cap");
    const std::size_t n_c = std::size_t(std::llround(std::exp2(log2nc)));
    int correct = 0;
    for (int t = 0; t < trials; ++t) {
        RandomSource trng = rng.sub(t);
        auto f = random_function(n_q, trng);
        Bits y = Bits(trng.next_u64()) & ((Bits(1) << (n_q - 1)) - 1);
        int truth = target_bit(f, y, alpha);
        int guess;
        if (method == "hypergraph") {
            std::size_t kappa = std::max<std::size_t>(1, n_c / std::size_t(n_q));
            RandomSource hrng = trng.sub(1);
            auto sol = run_hypergraph(f, prep, kappa, hrng);
            guess = sol.f_hat.f(y) ^ sol.f_hat.f(y ^ alpha.alpha);
        } else {
            SurrogateMode mode =
                method == "eigenshadow" ? SurrogateMode::full : SurrogateMode::sectors;
            RandomSource srng = trng.sub(1), drng = trng.sub(2);
            auto s = sample_surrogate(f, prep, alpha, y, n_c, mode, srng);
            MfPrediction p;
            if (method == "single-element") p = single_element_decode(s, drng);
            else if (method == "local-sum") p = sum_decode(s, SumDomain::local, drng);
            else if (method == "global-sum") p = sum_decode(s, SumDomain::global, drng);
            else p = eigenshadow_decode(s, drng);
            guess = p.bit;
        }
        if (guess == truth) ++correct;
    }
    return double(correct) / double(trials);
}

int run_mf(const json& cfg, const RunContext& rc) {
    auto methods = parse_methods(cfg, "config");
    auto channels = parse_channels(cfg, "config");
    auto n_qs = need_int_list(cfg, "config", "n_q", 2, 64);
    auto ks = parse_k_grid(cfg, "config");
    AlphaRule rule{"full", 0};
    if (cfg.contains("alpha_rule")) rule = parse_alpha_rule(cfg.at("alpha_rule"), "config.alpha_rule");
    int replicates = int(opt_int(cfg, "config", "replicates", 20));
    int trials = int(opt_int(cfg, "config", "trials", 32));
    if (replicates < 1) throw ConfigError("config.replicates", "must be >= 1");
    if (trials < 1) throw ConfigError("config.trials", "must be >= 1");
    for (int nq : n_qs) {
        check_qubit_cap(nq, rc);
        rule.make(nq);
        if (ks.back() * double(nq) > 40.0)
            throw ResourceError("n_c = 2^" + fmt(ks.back() * nq) + " exceeds the 2^40 copy cap");
    }
    if (rc.dry_run) return 0;

    struct Point {
        std::size_t mi, ci, ni, ki;
        int rep;
        double acc = 0.0;
    };
    std::vector<Point> pts;
    for (std::size_t mi = 0; mi < methods.size(); ++mi)
        for (std::size_t ci = 0; ci < channels.size(); ++ci)
            for (std::size_t ni = 0; ni < n_qs.size(); ++ni)
                for (std::size_t ki = 0; ki < ks.size(); ++ki)
                    for (int rep = 0; rep < replicates; ++rep)
                        pts.push_back({mi, ci, ni, ki, rep, 0.0});

    RandomSource root(rc.seed);
    parallel_for(pts.size(), rc.threads, [&](std::size_t i) {
        Point& p = pts[i];
        p.acc = mf_point_accuracy(methods[p.mi].name, channels[p.ci], n_qs[p.ni], ks[p.ki], rule,
                                  trials, root.sub(i));
    });

    // curve container: entries[method x channel], sets per n_q, replicate rows
    json entries = json::array();
    CsvWriter fig3(rc.out_dir / "fig3.csv", "config_hash,method,channel,eps_p,n_q,k,accuracy");
    for (std::size_t mi = 0; mi < methods.size(); ++mi)
        for (std::size_t ci = 0; ci < channels.size(); ++ci) {
            json sets = json::array();
            for (std::size_t ni = 0; ni < n_qs.size(); ++ni) {
                std::vector<std::vector<double>> reps(replicates, std::vector<double>(ks.size()));
                for (const Point& p : pts)
                    if (p.mi == mi && p.ci == ci && p.ni == ni) reps[p.rep][p.ki] = p.acc;
                for (std::size_t ki = 0; ki < ks.size(); ++ki) {
                    double mean = 0.0;
                    for (int r = 0; r < replicates; ++r) mean += reps[r][ki];
                    mean /= double(replicates);
                    fig3.row({rc.hash, methods[mi].name, channel_name(channels[ci].kind),
                              fmt(channels[ci].eps_p), std::to_string(n_qs[ni]), fmt(ks[ki]),
                              fmt(mean)});
                }
                sets.push_back({{"n_q", n_qs[ni]}, {"replicates", reps}});
            }
            entries.push_back({{"method", methods[mi].name},
                               {"channel", channel_name(channels[ci].kind)},
                               {"eps_p", channels[ci].eps_p},
                               {"alpha_rule", rule.label()},
                               {"k", ks},
                               {"sets", sets}});
        }
    write_json(rc, "curves.json", {{"kind", "mf-run"}, {"schema", "rps-curves"}, {"entries", entries}});
    return 0;
}

// ---------------------------------------------------------------------------
// Kind: shadow-validate
// ---------------------------------------------------------------------------

int run_shadow_validate(const json& cfg, const RunContext& rc) {
    auto n_qs = need_int_list(cfg, "config", "n_q", 1, 6);
    std::size_t shots = std::size_t(opt_int(cfg, "config", "variance_shots", 20000));
    int reps = int(opt_int(cfg, "config", "trace_repetitions", 10));
    NoiseChannelSpec chan(ChannelKind::dephasing, 0.0);
    if (cfg.contains("channels")) chan = parse_channels(cfg, "config")[0];
    std::vector<std::size_t> nc_grid;
    for (int x : need_int_list(cfg, "config", "nc_grid", 1, 1 << 26)) nc_grid.push_back(std::size_t(x));
    for (int nq : n_qs) check_qubit_cap(nq, rc);
    if (rc.dry_run) return 0;

    RandomSource root(rc.seed);
    CsvWriter csv(rc.out_dir / "shadow_validation.csv",
                  "config_hash,check,n_q,group,observed,predicted,rel_err");

    // single-snapshot element variance by Hamming distance, fresh f per shot
    for (std::size_t ni = 0; ni < n_qs.size(); ++ni) {
        const int nq = n_qs[ni];
        const std::size_t d = std::size_t(1) << nq;
        RandomSource rng = root.sub(100 + ni);
        std::vector<double> sumsq(nq + 1, 0.0);
        std::vector<long> counts(nq + 1, 0);
        for (std::size_t s = 0; s < shots; ++s) {
            auto f = random_function(nq, rng);
            auto psi = build_phase_state(f);
            auto dm = snapshot_density(shadow_snapshot(psi, rng));
            for (Bits n = 0; n < d; ++n)
                for (Bits m = 0; m < d; ++m) {
                    int w = hamming_distance(n, m);
                    cplx truth = cplx(double(f.sign(n) * f.sign(m)) / double(d));
                    sumsq[w] += std::norm(dm.at(n, m) - truth);
                    ++counts[w];
                }
        }
        for (int w = 0; w <= nq; ++w) {
            double emp = sumsq[w] / double(counts[w]);
            double law = element_variance(nq, w, 1);
            csv.row({rc.hash, "element-variance", std::to_string(nq), "w=" + std::to_string(w),
                     fmt(emp), fmt(law), fmt(std::abs(emp - law) / law)});
        }
    }

    // explicit shadows vs surrogate: trace distance to the exact noisy state
    json tdj = json::array();
    for (std::size_t ni = 0; ni < n_qs.size(); ++ni) {
        const int nq = n_qs[ni];
        auto report = surrogate_vs_truth_report(nq, nc_grid, chan, reps, root.sub(200 + ni));
        for (const auto& pt : report) {
            double rel = pt.td_explicit > 0.0
                             ? std::abs(pt.td_surrogate - pt.td_explicit) / pt.td_explicit
                             : 0.0;
            csv.row({rc.hash, "trace-distance", std::to_string(nq), "nc=" + std::to_string(pt.n_c),
                     fmt(pt.td_surrogate), fmt(pt.td_explicit), fmt(rel)});
            tdj.push_back({{"n_q", nq},
                           {"n_c", pt.n_c},
                           {"td_explicit", pt.td_explicit},
                           {"td_surrogate", pt.td_surrogate}});
        }
    }
    write_json(rc, "shadow_validation.json", {{"kind", "shadow-validate"}, {"trace_distance", tdj}});
    return 0;
}

// ---------------------------------------------------------------------------
// Curves file loading (shared by extrapolate and advantage-report)
// ---------------------------------------------------------------------------

struct CurveEntry {
    std::string method, channel, alpha_rule;
    double eps_p = 0.0;
    std::vector<double> k;
    std::vector<CurveSet> sets;
    int nq_max = 0;
};

std::vector<CurveEntry> load_curves(const json& cfg, const RunContext& rc) {
    json doc;
    if (cfg.contains("curves")) {
        doc = cfg.at("curves");
    } else {
        std::string file = need_string(cfg, "config", "curves_file");
        std::filesystem::path p(file);
        if (p.is_relative()) p = rc.config_dir / p;
        std::ifstream in(p);
        if (!in) throw ConfigError("config.curves_file", "cannot open '" + p.string() + "'");
        try {
            in >> doc;
        } catch (const json::exception& e) {
            throw ConfigError("config.curves_file", std::string("invalid JSON: ") + e.what());
        }
    }
    const json& arr = need(doc, "curves", "entries");
    if (!arr.is_array() || arr.empty()) throw ConfigError("curves.entries", "must be a nonempty array");

    std::optional<std::string> want_method, want_channel;
    if (cfg.contains("filter")) {
        const json& f = cfg.at("filter");
        if (f.contains("method")) want_method = need_string(f, "config.filter", "method");
        if (f.contains("channel")) want_channel = need_string(f, "config.filter", "channel");
    }

    std::vector<CurveEntry> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string p = "curves.entries[" + std::to_string(i) + "]";
        CurveEntry e;
        e.method = need_string(arr[i], p, "method");
        e.channel = need_string(arr[i], p, "channel");
        e.eps_p = need_number(arr[i], p, "eps_p");
        e.alpha_rule = arr[i].contains("alpha_rule") ? arr[i].at("alpha_rule").get<std::string>() : "full";
        if (want_method && e.method != *want_method) continue;
        if (want_channel && e.channel != *want_channel) continue;
        const json& kj = need(arr[i], p, "k");
        for (const auto& v : kj) e.k.push_back(v.get<double>());
        const json& sets = need(arr[i], p, "sets");
        for (std::size_t si = 0; si < sets.size(); ++si) {
            const std::string sp = p + ".sets[" + std::to_string(si) + "]";
            CurveSet cs;
            cs.n_q = int(need_int(sets[si], sp, "n_q"));
            e.nq_max = std::max(e.nq_max, cs.n_q);
            const json& reps = need(sets[si], sp, "replicates");
            if (!reps.is_array() || reps.size() < 2)
                throw ConfigError(sp + ".replicates", "need >= 2 replicate curves");
            for (const auto& rj : reps) {
                AccuracyCurve c;
                c.k = e.k;
                for (const auto& v : rj) c.accuracy.push_back(v.get<double>());
                if (c.accuracy.size() != e.k.size())
                    throw ConfigError(sp + ".replicates", "replicate length mismatch with k grid");
                cs.replicates.push_back(std::move(c));
            }
            e.sets.push_back(std::move(cs));
        }
        out.push_back(std::move(e));
    }
    if (out.empty()) throw ConfigError("config.filter", "no curve entries match the filter");
    return out;
}

// ---------------------------------------------------------------------------
// Kind: extrapolate
// ---------------------------------------------------------------------------

struct EntryAnalysis {
    ThresholdSurface surface;
    FiniteSizeFit fit;
    ValidationDiagnostics diag;
    TrustGate gate;
};

EntryAnalysis analyze_entry(const CurveEntry& e, const std::vector<double>& thresholds, long B,
                            double alpha_ci, RandomSource rng) {
    EntryAnalysis a;
    a.surface = bootstrap_surface(e.sets, thresholds, B, alpha_ci, rng);
    a.fit = fit_finite_size(a.surface);
    a.diag = forward_validation(a.surface);
    a.gate = trust_gate(a.diag, e.nq_max);
    return a;
}

json diag_json(const EntryAnalysis& a) {
    return {{"applicable", a.diag.applicable},
            {"reason", a.diag.reason},
            {"n_hor", a.diag.n_hor},
            {"rmse_pooled", a.diag.rmse_pooled},
            {"rmse_max", a.diag.rmse_max},
            {"sigma_cv_obs", a.diag.sigma_cv_obs},
            {"sigma_cv_extrap", a.diag.sigma_cv_extrap},
            {"trusted", a.gate.trusted},
            {"trust_reason", a.gate.reason}};
}

int run_extrapolate(const json& cfg, const RunContext& rc) {
    auto entries = load_curves(cfg, rc);
    long B = opt_int(cfg, "config", "bootstrap_B", 1600);
    double ci = opt_number(cfg, "config", "ci", 0.90);
    if (B < 1) throw ConfigError("config.bootstrap_B", "must be >= 1");
    if (!(ci > 0.0 && ci < 1.0)) throw ConfigError("config.ci", "must be in (0, 1)");
    std::vector<double> thresholds = default_threshold_grid();
    if (cfg.contains("thresholds")) {
        thresholds.clear();
        for (const auto& v : cfg.at("thresholds")) thresholds.push_back(v.get<double>());
        if (thresholds.empty()) throw ConfigError("config.thresholds", "must be nonempty");
        for (double t : thresholds)
            if (!(t > 0.5 && t < 1.0)) throw ConfigError("config.thresholds", "values must be in (0.5, 1)");
    }
    if (rc.dry_run) return 0;

    RandomSource root(rc.seed);
    CsvWriter csv(rc.out_dir / "surface.csv",
                  "config_hash,method,channel,eps_p,T,n_q,median_kx,sigma_k,n_success,valid");
    json jentries = json::array();
    for (std::size_t ei = 0; ei < entries.size(); ++ei) {
        const auto& e = entries[ei];
        auto a = analyze_entry(e, thresholds, B, 1.0 - ci, root.sub(ei));
        for (std::size_t t = 0; t < a.surface.thresholds.size(); ++t)
            for (const auto& pt : a.surface.points[t])
                csv.row({rc.hash, e.method, e.channel, fmt(e.eps_p), fmt(a.surface.thresholds[t]),
                         std::to_string(pt.n_q), fmt(pt.median_kx), fmt(pt.sigma_k),
                         std::to_string(pt.n_success), pt.valid ? "1" : "0"});
        json slices = json::array();
        for (const auto& s : a.fit.slices)
            slices.push_back({{"T", s.T},
                              {"C", s.C},
                              {"beta", s.beta},
                              {"cov_cc", s.cov_cc},
                              {"cov_cb", s.cov_cb},
                              {"cov_bb", s.cov_bb},
                              {"n_points", s.n_points}});
        jentries.push_back({{"method", e.method},
                            {"channel", e.channel},
                            {"eps_p", e.eps_p},
                            {"nq_max_observed", e.nq_max},
                            {"slices", slices},
                            {"diagnostics", diag_json(a)}});
    }
    write_json(rc, "extrapolation.json", {{"kind", "extrapolate"}, {"entries", jentries}});
    return 0;
}

// ---------------------------------------------------------------------------
// Kind: advantage-report
// ---------------------------------------------------------------------------

int run_advantage(const json& cfg, const RunContext& rc) {
    auto entries = load_curves(cfg, rc);
    auto targets = need_int_list(cfg, "config", "targets", 2, 64);
    long B = opt_int(cfg, "config", "bootstrap_B", 1600);
    double ci = opt_number(cfg, "config", "ci", 0.90);
    std::vector<double> etas;
    const json& ej = need(cfg, "config", "eta");
    if (ej.is_number()) etas.push_back(ej.get<double>());
    else
        for (const auto& v : ej) etas.push_back(v.get<double>());
    for (double eta : etas)
        if (!(eta >= 0.0 && eta < 0.5)) throw ConfigError("config.eta", "must be in [0, 1/2)");

    // A_Q source: explicit per-size list, or the factorized device prediction
    const json& aj = need(cfg, "config", "a_q");
    std::map<std::pair<std::string, int>, double> aq_table; // (channel:eps, n_q) -> A_Q
    DeviceModel fq_dev;
    bool have_fq_model = false;
    VisibilityModel vm;
    AlphaRule fq_rule{"full", 0};
    if (aj.contains("explicit")) {
        for (const auto& p : aj.at("explicit")) {
            int nq = int(need_int(p, "config.a_q.explicit[]", "n_q"));
            double v = need_number(p, "config.a_q.explicit[]", "value");
            if (!(v > 0.0 && v <= 1.0)) throw ConfigError("config.a_q.explicit[].value", "must be in (0, 1]");
            aq_table[{"*", nq}] = v;
        }
        for (int nq : targets)
            if (!aq_table.count({"*", nq}))
                throw ConfigError("config.a_q.explicit", "missing value for target n_q=" + std::to_string(nq));
    } else if (aj.contains("fq_model")) {
        const json& fm = aj.at("fq_model");
        fq_dev = parse_device(need(fm, "config.a_q.fq_model", "device"), "config.a_q.fq_model.device");
        if (fm.contains("alpha_rule"))
            fq_rule = parse_alpha_rule(fm.at("alpha_rule"), "config.a_q.fq_model.alpha_rule");
        have_fq_model = true;
        if (!rc.dry_run) {
            auto grid = need_int_list(fm, "config.a_q.fq_model", "vm_n_q", 2, rc.max_qubits);
            SimulationBudget vb;
            vb.n_f = std::size_t(opt_int(fm, "config.a_q.fq_model", "vm_n_f", 12));
            vb.n_mcs = 1;
            vb.n_shots = std::size_t(opt_int(fm, "config.a_q.fq_model", "vm_n_shots", 400));
            RandomSource vrng(rc.seed ^ 0x5eedULL);
            vm = fit_vm_for_device(fq_dev, grid, vb, vrng);
        }
    } else {
        throw ConfigError("config.a_q", "need either 'explicit' or 'fq_model'");
    }
    if (rc.dry_run) return 0;

    RandomSource root(rc.seed);
    std::vector<EntryAnalysis> analyses;
    for (std::size_t ei = 0; ei < entries.size(); ++ei)
        analyses.push_back(analyze_entry(entries[ei], default_threshold_grid(), B, 1.0 - ci,
                                         root.sub(ei)));

    // group entries by (channel, eps_p): best-method selection is within-group
    std::map<std::pair<std::string, double>, std::vector<std::size_t>> groups;
    for (std::size_t ei = 0; ei < entries.size(); ++ei)
        groups[{entries[ei].channel, entries[ei].eps_p}].push_back(ei);

    CsvWriter csv(rc.out_dir / "advantage.csv",
                  "config_hash,n_q,method,channel,eps_p,eps_r,alpha_rule,eta,A_Q,T_eta,log2_nc,"
                  "ci68_lo,ci68_hi,ci95_lo,ci95_hi,runtime_s,trusted,censor_flag,best");
    CsvWriter fig5(rc.out_dir / "fig5.csv",
                   "config_hash,method,channel,eps_p,eta,n_q,log2_nc,runtime_s,trusted,censor_flag,"
                   "observed_or_extrapolated");
    json jpoints = json::array();

    for (const auto& [key, idxs] : groups) {
        NoiseChannelSpec prep(channel_from_name(key.first), key.second);
        auto a_q_of = [&](int nq) {
            if (have_fq_model) {
                Concept alpha = fq_rule.make(nq);
                return predict_accuracy(nq, hamming_weight(alpha.alpha), prep, fq_dev, vm);
            }
            return aq_table.at({"*", nq});
        };
        std::vector<AdvantageInputs> methods;
        for (std::size_t ei : idxs)
            methods.push_back({entries[ei].method, analyses[ei].fit, analyses[ei].diag,
                               entries[ei].nq_max});
        for (double eta : etas) {
            auto report = advantage_report(methods, a_q_of, targets, eta, rc.cycle_time_s);
            for (const auto& p : report) {
                int nq_max = 0;
                std::string arule = "full";
                for (std::size_t ei : idxs)
                    if (entries[ei].method == p.method) {
                        nq_max = entries[ei].nq_max;
                        arule = entries[ei].alpha_rule;
                    }
                std::string oe = p.n_q > nq_max ? "extrapolated" : "observed";
                csv.row({rc.hash, std::to_string(p.n_q), p.method, key.first, fmt(key.second),
                         fmt(have_fq_model ? fq_dev.eps_r : 0.0), arule, fmt(eta), fmt(p.a_q),
                         fmt(p.t_eta), fmt(p.log2_nc), fmt(p.ci68_lo), fmt(p.ci68_hi),
                         fmt(p.ci95_lo), fmt(p.ci95_hi), fmt(p.runtime_s), p.trusted ? "1" : "0",
                         p.censor_flag, p.best ? "1" : "0"});
                fig5.row({rc.hash, p.method, key.first, fmt(key.second), fmt(eta),
                          std::to_string(p.n_q), fmt(p.log2_nc), fmt(p.runtime_s),
                          p.trusted ? "1" : "0", p.censor_flag, oe});
                jpoints.push_back({{"n_q", p.n_q},
                                   {"method", p.method},
                                   {"channel", key.first},
                                   {"eps_p", key.second},
                                   {"eta", eta},
                                   {"a_q", p.a_q},
                                   {"t_eta", p.t_eta},
                                   {"log2_nc", std::isnan(p.log2_nc) ? json() : json(p.log2_nc)},
                                   {"runtime_s", std::isnan(p.runtime_s) ? json() : json(p.runtime_s)},
                                   {"trusted", p.trusted},
                                   {"censor_flag", p.censor_flag},
                                   {"best", p.best}});
            }
        }
    }
    json jdiag = json::array();
    for (std::size_t ei = 0; ei < entries.size(); ++ei)
        jdiag.push_back({{"method", entries[ei].method},
                         {"channel", entries[ei].channel},
                         {"eps_p", entries[ei].eps_p},
                         {"diagnostics", diag_json(analyses[ei])}});
    write_json(rc, "advantage.json",
               {{"kind", "advantage-report"}, {"points", jpoints}, {"method_diagnostics", jdiag}});
    return 0;
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

int run_config(const std::filesystem::path& config_path, RunContext rc, bool seed_override,
               std::uint64_t seed_value, const std::string& out_override, bool cycle_override,
               double cycle_value) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("config", "cannot open '" + config_path.string() + "'");
    json cfg;
    try {
        in >> cfg;
    } catch (const json::exception& e) {
        throw ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
    if (!cfg.is_object()) throw ConfigError("config", "top level must be an object");

    std::int64_t sv = opt_int(cfg, "config", "schema_version", 1);
    if (sv != 1) throw ConfigError("config.schema_version", "unsupported version");
    std::string kind = need_string(cfg, "config", "kind");
    if (!cfg.contains("seed")) throw ConfigError("config.seed", "missing required field (seeds are explicit)");
    rc.seed = std::uint64_t(need_int(cfg, "config", "seed"));
    if (seed_override) rc.seed = seed_value;

    // output directory: config < RPS_OUT_DIR env < --out flag
    std::string out_dir = cfg.contains("out_dir") ? need_string(cfg, "config", "out_dir") : ".";
    if (const char* env = std::getenv("RPS_OUT_DIR")) out_dir = env;
    if (!out_override.empty()) out_dir = out_override;
    rc.out_dir = out_dir;
    rc.config_dir = config_path.has_parent_path() ? config_path.parent_path()
                                                  : std::filesystem::path(".");

    rc.cycle_time_s = opt_number(cfg, "config", "cycle_time_s", 1e-6);
    if (cycle_override) rc.cycle_time_s = cycle_value;
    if (!(rc.cycle_time_s > 0.0)) throw ConfigError("config.cycle_time_s", "must be positive");

    // the hash covers the canonical config plus any effective overrides
    json canonical = cfg;
    canonical["seed"] = rc.seed;
    canonical["cycle_time_s"] = rc.cycle_time_s;
    canonical.erase("out_dir");
    rc.hash = config_hash(canonical);

    if (!rc.dry_run) std::filesystem::create_directories(rc.out_dir);

    int status;
    if (kind == "fq-accuracy") status = run_fq_accuracy(cfg, rc);
    else if (kind == "mf-run") status = run_mf(cfg, rc);
    else if (kind == "shadow-validate") status = run_shadow_validate(cfg, rc);
    else if (kind == "extrapolate") status = run_extrapolate(cfg, rc);
    else if (kind == "advantage-report") status = run_advantage(cfg, rc);
    else throw ConfigError("config.kind", "unknown experiment kind '" + kind + "'");

    std::printf("%s %s config_hash=%s out=%s\n", rc.dry_run ? "valid" : "done", kind.c_str(),
                rc.hash.c_str(), rc.dry_run ? "-" : rc.out_dir.string().c_str());
    return status;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"phase-state learning experiment runner"};
    app.require_subcommand(1);

    std::string config_file, out_dir;
    std::uint64_t seed = 0;
    bool has_seed = false;
    int threads = 1, max_qubits = rps::kMaxQubitsDense;
    double cycle_time = 1e-6;
    bool has_cycle = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", config_file, "JSON experiment config")->required();
        sub->add_option("--out", out_dir, "output directory (overrides config and RPS_OUT_DIR)");
        sub->add_option("--seed", seed, "seed override")->each([&](const std::string&) { has_seed = true; });
        sub->add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 256));
        sub->add_option("--max-qubits", max_qubits, "dense simulation qubit cap")->check(CLI::Range(1, 64));
        sub->add_option("--cycle-time-s", cycle_time, "experimental cycle time in seconds")
            ->each([&](const std::string&) { has_cycle = true; });
    };
    CLI::App* run = app.add_subcommand("run", "run an experiment config");
    CLI::App* validate = app.add_subcommand("validate", "dry-run schema check");
    add_common(run);
    add_common(validate);

    CLI11_PARSE(app, argc, argv);

    RunContext rc;
    rc.threads = threads;
    rc.max_qubits = max_qubits;
    rc.dry_run = validate->parsed();

    try {
        return run_config(config_file, rc, has_seed, seed, out_dir, has_cycle, cycle_time);
    } catch (const ConfigError& e) {
        nlohmann::json err{{"error", {{"code", kExitSchema}, {"field", e.field}, {"message", e.what()}}}};
        std::fprintf(stderr, "%s\n", err.dump().c_str());
        return kExitSchema;
    } catch (const ResourceError& e) {
        nlohmann::json err{{"error", {{"code", kExitResource}, {"message", e.what()}}}};
        std::fprintf(stderr, "%s\n", err.dump().c_str());
        return kExitResource;
    } catch (const std::exception& e) {
        nlohmann::json err{{"error", {{"code", kExitInvariant}, {"message", e.what()}}}};
        std::fprintf(stderr, "%s\n", err.dump().c_str());
        return kExitInvariant;
    }
}
