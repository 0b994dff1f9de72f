#pragma once
// Fully quantum protocol, end to end: measurement circuit U(alpha), noisy
// routed execution, the trajectory-decimation accuracy estimator, and the
// analytical visibility decomposition A_Q = (1 + V_p * V_m * V_r) / 2.

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "rps/boolean_function.hpp"
#include "rps/device.hpp"
#include "rps/noise.hpp"
#include "rps/routing.hpp"
#include "rps/statevector_ops.hpp"

namespace rps {

// |alpha|-1 CNOTs controlled on the final qubit targeting the other active
// qubits, then H on the final qubit.
inline std::vector<GateOp> build_measurement_circuit(const Concept& alpha, int n_q) {
    if (alpha.n_q != n_q) throw std::invalid_argument("build_measurement_circuit: n_q mismatch");
    const int control = n_q - 1;
    std::vector<GateOp> gates;
    for (int t = 0; t < control; ++t)
        if (get_bit(alpha.alpha, t)) gates.push_back(GateOp::cnot(control, t));
    gates.push_back(GateOp::h(control));
    return gates;
}

// Phase state laid out on physical wires: logical qubit l lives at physical
// position layout[l].
inline StateVector permuted_phase_state(const BooleanFunction& f, const std::vector<int>& layout) {
    StateVector st(f.n_q);
    const double a = 1.0 / std::sqrt(double(st.dim()));
    for (std::size_t y = 0; y < st.dim(); ++y) {
        std::size_t k = 0;
        for (int l = 0; l < f.n_q; ++l)
            if ((y >> l) & 1u) k |= std::size_t(1) << layout[l];
        st.amp[k] = a * double(f.signs[y]);
    }
    return st;
}

inline Bits physical_to_logical(Bits z, const std::vector<int>& layout) {
    Bits y = 0;
    for (std::size_t l = 0; l < layout.size(); ++l)
        if (get_bit(z, layout[l])) y |= Bits(1) << l;
    return y;
}

// Executes the routed circuit on `state` in trajectory mode: ideal unitaries
// plus stochastic Pauli gate noise and idle decoherence.
inline void run_noisy_circuit(StateVector& state, const RoutedCircuit& rc, bool circuit_noise,
                              RandomSource& rng) {
    for (const GateOp& g : rc.gates) {
        if (g.kind == GateKind::Idle) {
            if (circuit_noise) apply_idle_noise(state, g.q0, g.idle, rng);
            continue;
        }
        apply_gate(state, g);
        if (!circuit_noise || g.gate_eps <= 0.0) continue;
        if (rng.uniform() < g.gate_eps) {
            if (g.q1 >= 0) {
                std::uint64_t p = rng.below(16); // uniform over the 16 two-qubit Paulis
                apply_pauli(state, g.q0, int(p & 3u));
                apply_pauli(state, g.q1, int(p >> 2));
            } else {
                apply_pauli(state, g.q0, int(rng.below(4)));
            }
        }
    }
}

struct SimulationBudget {
    std::size_t n_f = 1;
    std::size_t n_mcs = 1;
    std::size_t n_shots = 1;
};

struct ProtocolOptions {
    bool circuit_noise = true;  // gate + idle noise from the device
    bool readout_noise = true;  // eps_r bit flips
    bool decimate = true;       // group trajectories by jump code
    int route_trials = 20;
    int max_qubits = kMaxQubitsDense;
};

struct AccuracyEstimate {
    double accuracy = 0.0;
    double std_error = 0.0;
    double mean_unique_states = 0.0;
    std::vector<double> per_f;
};

inline double readout_visibility(int n_q, double eps_r) {
    if (eps_r < 0.0 || eps_r > 0.5) throw std::invalid_argument("readout_visibility: eps_r out of [0,1/2]");
    return (1.0 - 2.0 * eps_r) * std::pow(1.0 - eps_r, n_q - 1);
}

// Trajectory Monte Carlo estimate of the protocol accuracy: per function,
// N_mcs preparation trajectories grouped by jump code into N_u unique states
// with multiplicities m_u; the noisy circuit runs N_shots times per unique
// state; group accuracies recombine as sum(m_u a_u) / N_mcs.
inline AccuracyEstimate simulate_protocol(int n_q, const Concept& alpha, const NoiseChannelSpec& prep,
                                          const DeviceModel& dev, const SimulationBudget& budget,
                                          RandomSource rng, const ProtocolOptions& opts = {}) {
    if (budget.n_f < 1 || budget.n_mcs < 1 || budget.n_shots < 1)
        throw std::invalid_argument("simulate_protocol: zero budget");
    if (n_q < 1 || n_q > opts.max_qubits) throw std::invalid_argument("simulate_protocol: n_q exceeds cap");

    auto logical = build_measurement_circuit(alpha, n_q);
    RandomSource route_rng = rng.sub(17);
    RoutedCircuit rc = route_circuit(logical, dev, n_q, opts.route_trials, route_rng);

    // A circuit with no stochastic elements can be applied once per unique
    // state, with all shots drawn from the same output distribution.
    bool deterministic_circuit = !opts.circuit_noise;
    if (opts.circuit_noise) {
        deterministic_circuit = true;
        for (const GateOp& g : rc.gates)
            if (g.kind == GateKind::Idle || g.gate_eps > 0.0) { deterministic_circuit = false; break; }
    }
    const double eps_r = opts.readout_noise ? dev.eps_r : 0.0;

    AccuracyEstimate out;
    out.per_f.reserve(budget.n_f);
    double sum_unique = 0.0;

    for (std::size_t fi = 0; fi < budget.n_f; ++fi) {
        RandomSource frng = rng.sub(1000 + fi);
        BooleanFunction f = random_function(n_q, frng);
        StateVector base = permuted_phase_state(f, rc.init_layout);

        // Map logical jump codes to post-noise states. Preparation noise acts
        // on logical qubits; the state is stored in the physical frame, so
        // the per-qubit Kraus draws walk physical wires in logical order.
        std::map<JumpCode, std::pair<std::size_t, StateVector>> groups;
        std::vector<std::pair<JumpCode, StateVector>> traj_states; // non-decimated path
        RandomSource prep_rng = frng.sub(1);
        for (std::size_t s = 0; s < budget.n_mcs; ++s) {
            if (prep.eps_p == 0.0) {
                if (opts.decimate) { groups.emplace(0, std::make_pair(budget.n_mcs, base)); break; }
                traj_states.emplace_back(0, base);
                continue;
            }
            StateVector st = base;
            JumpCode code = 0;
            // Trajectory on logical qubit order: qubit l is physical wire
            // init_layout[l].
            {
                const auto ks = kraus_operators(prep);
                for (int l = 0; l < n_q; ++l) {
                    int q = rc.init_layout[l];
                    const std::size_t stride = std::size_t(1) << q;
                    double p[4] = {0, 0, 0, 0};
                    for (std::size_t basei = 0; basei < st.dim(); basei += stride << 1) {
                        for (std::size_t i = basei; i < basei + stride; ++i) {
                            cplx a0 = st.amp[i], a1 = st.amp[i + stride];
                            for (std::size_t j = 0; j < ks.size(); ++j) {
                                p[j] += std::norm(ks[j][0][0] * a0 + ks[j][0][1] * a1);
                                p[j] += std::norm(ks[j][1][0] * a0 + ks[j][1][1] * a1);
                            }
                        }
                    }
                    double u = prep_rng.uniform();
                    std::size_t pick = ks.size() - 1;
                    double acc = 0.0;
                    for (std::size_t j = 0; j < ks.size(); ++j) {
                        acc += p[j];
                        if (u < acc) { pick = j; break; }
                    }
                    const double inv = 1.0 / std::sqrt(p[pick]);
                    Mat2 m = ks[pick];
                    for (auto& row : m) for (auto& e : row) e *= inv;
                    apply_single_qubit(st, q, m);
                    code |= JumpCode(pick) << (2 * l);
                }
            }
            if (opts.decimate) {
                auto it = groups.find(code);
                if (it == groups.end()) groups.emplace(code, std::make_pair(std::size_t(1), std::move(st)));
                else ++it->second.first;
            } else {
                traj_states.emplace_back(code, std::move(st));
            }
        }

        auto run_group = [&](const StateVector& st, std::size_t shots, RandomSource grng) -> double {
            std::size_t correct = 0;
            if (deterministic_circuit) {
                StateVector evolved = st;
                run_noisy_circuit(evolved, rc, opts.circuit_noise, grng);
                RandomSource mrng = grng.sub(7);
                auto outcomes = sample_measurement(evolved, shots, mrng);
                for (Bits z : outcomes) {
                    if (eps_r > 0.0) z = apply_readout_flips(z, n_q, eps_r, mrng);
                    Bits zl = physical_to_logical(z, rc.final_layout);
                    Bits y = zl & ~(Bits(1) << (n_q - 1));
                    int b = get_bit(zl, n_q - 1);
                    if (b == target_bit(f, y, alpha)) ++correct;
                }
            } else {
                for (std::size_t sh = 0; sh < shots; ++sh) {
                    RandomSource srng = grng.sub(sh);
                    StateVector evolved = st;
                    run_noisy_circuit(evolved, rc, opts.circuit_noise, srng);
                    auto outcomes = sample_measurement(evolved, 1, srng);
                    Bits z = outcomes[0];
                    if (eps_r > 0.0) z = apply_readout_flips(z, n_q, eps_r, srng);
                    Bits zl = physical_to_logical(z, rc.final_layout);
                    Bits y = zl & ~(Bits(1) << (n_q - 1));
                    int b = get_bit(zl, n_q - 1);
                    if (b == target_bit(f, y, alpha)) ++correct;
                }
            }
            return double(correct) / double(shots);
        };

        double acc_f = 0.0;
        if (opts.decimate) {
            std::size_t gi = 0;
            for (auto& [code, grp] : groups) {
                RandomSource grng = frng.sub(100000 + gi++);
                acc_f += double(grp.first) * run_group(grp.second, budget.n_shots, grng);
            }
            acc_f /= double(budget.n_mcs);
            sum_unique += double(groups.size());
        } else {
            for (std::size_t ti = 0; ti < traj_states.size(); ++ti) {
                RandomSource grng = frng.sub(100000 + ti);
                acc_f += run_group(traj_states[ti].second, budget.n_shots, grng);
            }
            acc_f /= double(traj_states.size());
            sum_unique += double(traj_states.size());
        }
        out.per_f.push_back(acc_f);
    }

    double mean = 0.0;
    for (double a : out.per_f) mean += a;
    mean /= double(out.per_f.size());
    double var = 0.0;
    for (double a : out.per_f) var += (a - mean) * (a - mean);
    var = out.per_f.size() > 1 ? var / double(out.per_f.size() - 1) : 0.0;
    out.accuracy = mean;
    out.std_error = std::sqrt(var / double(out.per_f.size()));
    out.mean_unique_states = sum_unique / double(budget.n_f);
    return out;
}

// Stretched-exponential measurement-circuit visibility V_m = A exp(-c w^beta)
// with A fixed to 1.
struct VisibilityModel {
    std::string device_name;
    double amplitude = 1.0;
    double c = 0.0;
    double beta = 1.0;

    double vm(int alpha_weight) const {
        return amplitude * std::exp(-c * std::pow(double(alpha_weight), beta));
    }
};

// Least squares on log-visibility: minimize sum (log V_i + c w_i^beta)^2
// over (c, beta); c is closed-form given beta, beta by golden-section search.
inline VisibilityModel fit_vm(const std::vector<std::pair<int, double>>& data) {
    std::vector<double> w, y;
    for (auto& [aw, v] : data) {
        if (v > 0.0 && v <= 1.0) { w.push_back(double(aw)); y.push_back(-std::log(v)); }
    }
    if (w.size() < 3) throw std::invalid_argument("fit_vm: need >= 3 usable points");
    bool all_equal = true;
    for (double yy : y) if (std::abs(yy - y[0]) > 1e-15) { all_equal = false; break; }
    if (all_equal && std::abs(y[0]) < 1e-15) throw std::domain_error("fit_vm: degenerate data (all V_m equal to 1)");

    auto c_of = [&](double beta) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            double x = std::pow(w[i], beta);
            num += x * y[i];
            den += x * x;
        }
        return den > 0.0 ? num / den : 0.0;
    };
    auto sse = [&](double beta) {
        double c = c_of(beta);
        double s = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            double r = y[i] - c * std::pow(w[i], beta);
            s += r * r;
        }
        return s;
    };
    // Golden-section over a generous exponent range.
    double lo = 0.05, hi = 6.0;
    const double gr = 0.61803398874989484820;
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = sse(x1), f2 = sse(x2);
    for (int it = 0; it < 200; ++it) {
        if (f1 < f2) { hi = x2; x2 = x1; f2 = f1; x1 = hi - gr * (hi - lo); f1 = sse(x1); }
        else { lo = x1; x1 = x2; f1 = f2; x2 = lo + gr * (hi - lo); f2 = sse(x2); }
    }
    VisibilityModel m;
    m.beta = 0.5 * (lo + hi);
    m.c = c_of(m.beta);
    m.amplitude = 1.0;
    return m;
}

// Measures V_m for the circuit alone: ideal preparation, noisy routed
// circuit, no readout flips; V = 2A - 1 at |alpha| = n_q.
inline double measure_vm_point(const DeviceModel& dev, int n_q, const SimulationBudget& budget,
                               RandomSource rng, int route_trials = 20) {
    Concept alpha(n_q, Bits((std::uint64_t(1) << n_q) - 1));
    ProtocolOptions opts;
    opts.circuit_noise = true;
    opts.readout_noise = false;
    opts.route_trials = route_trials;
    NoiseChannelSpec no_prep(ChannelKind::dephasing, 0.0);
    SimulationBudget b = budget;
    b.n_mcs = 1; // no preparation noise: a single trajectory group
    auto est = simulate_protocol(n_q, alpha, no_prep, dev, b, rng, opts);
    return 2.0 * est.accuracy - 1.0;
}

inline VisibilityModel fit_vm_for_device(const DeviceModel& dev, const std::vector<int>& n_q_grid,
                                         const SimulationBudget& per_point_budget, RandomSource rng,
                                         int route_trials = 20) {
    std::vector<std::pair<int, double>> pts;
    for (std::size_t i = 0; i < n_q_grid.size(); ++i) {
        double v = measure_vm_point(dev, n_q_grid[i], per_point_budget, rng.sub(i), route_trials);
        pts.emplace_back(n_q_grid[i], v);
    }
    VisibilityModel m = fit_vm(pts);
    m.device_name = dev.name;
    return m;
}

// Factorized prediction A_Q = (1 + V_p V_m V_r) / 2.
inline double predict_accuracy(int n_q, int alpha_weight, const NoiseChannelSpec& prep,
                               const DeviceModel& dev, const VisibilityModel& vm) {
    double vp = expected_visibility_vp(prep, n_q, alpha_weight);
    double vr = readout_visibility(n_q, dev.eps_r);
    return 0.5 * (1.0 + vp * vm.vm(alpha_weight) * vr);
}

} // namespace rps
