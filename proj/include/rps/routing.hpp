#pragma once
// Hardware-aware routing and scheduling: a lightweight SABRE-style heuristic
// (front-layer + lookahead distance cost, random tie-breaking, multi-trial
// minimum-2q-count selection), ASAP scheduling with per-qubit clocks, and
// terminal-delay pruning. This is NOT a reproduction of any external
// transpiler; visibility fit constants derived from it are local to this
// router.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rps/device.hpp"
#include "rps/rng.hpp"
#include "rps/statevector_ops.hpp"

namespace rps {

struct RoutingStats {
    std::size_t two_qubit = 0;
    std::size_t one_qubit = 0;
    double total_idle = 0.0; // in t_2q units, after pruning
};

struct RoutedCircuit {
    int n_q = 0;
    std::vector<GateOp> gates;        // physical indices; SWAPs emitted as 3 CNOTs
    std::vector<int> init_layout;     // logical l sits at physical init_layout[l]
    std::vector<int> final_layout;    // after all SWAPs
    RoutingStats stats;
};

namespace detail {

struct RouteAttempt {
    std::vector<GateOp> gates; // physical CNOT/H/X, durations unset
    std::vector<int> init_layout;
    std::vector<int> final_layout;
    std::size_t cnots = 0;
};

inline RouteAttempt route_once(const std::vector<GateOp>& logical, const DeviceGraph& g,
                               std::vector<int> layout, RandomSource& rng) {
    const int n = g.n_q;
    RouteAttempt out;
    out.init_layout = layout;

    // Per-qubit dependency chains.
    const std::size_t ng = logical.size();
    std::vector<int> deps(ng, 0);
    std::vector<std::vector<std::size_t>> succ(ng);
    {
        std::vector<long> last(n, -1);
        for (std::size_t i = 0; i < ng; ++i) {
            const GateOp& gt = logical[i];
            int qs[2] = {gt.q0, gt.q1};
            int nq = gt.q1 >= 0 ? 2 : 1;
            for (int j = 0; j < nq; ++j) {
                if (last[qs[j]] >= 0) { succ[std::size_t(last[qs[j]])].push_back(i); ++deps[i]; }
                last[qs[j]] = long(i);
            }
        }
    }
    std::vector<std::size_t> front;
    for (std::size_t i = 0; i < ng; ++i) if (deps[i] == 0) front.push_back(i);

    auto emit_exec = [&](std::size_t gi) {
        const GateOp& gt = logical[gi];
        GateOp phys = gt;
        phys.q0 = layout[gt.q0];
        if (gt.q1 >= 0) phys.q1 = layout[gt.q1];
        out.gates.push_back(phys);
        if (gt.kind == GateKind::CNOT) ++out.cnots;
        for (std::size_t s : succ[gi]) if (--deps[s] == 0) front.push_back(s);
    };

    std::pair<int, int> last_swap{-1, -1};
    std::size_t swap_guard = 0;
    const std::size_t swap_cap = 64 + std::size_t(n) * std::size_t(n) * 16;

    while (!front.empty()) {
        // Execute everything executable, in index order for determinism.
        bool progress = true;
        while (progress) {
            progress = false;
            std::sort(front.begin(), front.end());
            for (std::size_t k = 0; k < front.size(); ++k) {
                std::size_t gi = front[k];
                const GateOp& gt = logical[gi];
                bool ok = gt.q1 < 0 || g.adjacent(layout[gt.q0], layout[gt.q1]);
                if (ok) {
                    front.erase(front.begin() + long(k));
                    emit_exec(gi);
                    progress = true;
                    last_swap = {-1, -1};
                    break;
                }
            }
        }
        if (front.empty()) break;

        // All remaining front gates are blocked two-qubit gates: pick a SWAP.
        // Lookahead: the next few unexecuted two-qubit gates beyond the front.
        std::vector<std::pair<int, int>> front_pairs, look_pairs;
        for (std::size_t gi : front)
            front_pairs.emplace_back(logical[gi].q0, logical[gi].q1);
        {
            std::size_t taken = 0, qi = 0;
            std::vector<std::size_t> order = front;
            while (qi < order.size() && taken < 8) {
                std::size_t gi = order[qi++];
                for (std::size_t s : succ[gi]) {
                    if (std::find(order.begin(), order.end(), s) == order.end()) {
                        order.push_back(s);
                        if (logical[s].q1 >= 0 && logical[s].kind == GateKind::CNOT &&
                            std::find(front.begin(), front.end(), s) == front.end()) {
                            look_pairs.emplace_back(logical[s].q0, logical[s].q1);
                            ++taken;
                        }
                    }
                }
            }
        }

        // Candidate swaps: edges touching any qubit of a blocked front gate.
        std::vector<std::pair<int, int>> cands;
        for (auto& [lq0, lq1] : front_pairs) {
            for (int lq : {lq0, lq1}) {
                int p = layout[lq];
                for (int nb : g.adj[p]) {
                    auto e = std::minmax(p, nb);
                    std::pair<int, int> c{e.first, e.second};
                    if (c == last_swap) continue; // avoid undoing the last swap
                    if (std::find(cands.begin(), cands.end(), c) == cands.end()) cands.push_back(c);
                }
            }
        }
        if (cands.empty()) { // only the reverse swap available
            cands.push_back(last_swap);
        }

        std::vector<int> log_at(n); // physical -> logical
        for (int l = 0; l < n; ++l) log_at[layout[l]] = l;

        double best = 1e300;
        std::vector<std::size_t> best_idx;
        for (std::size_t ci = 0; ci < cands.size(); ++ci) {
            auto [pa, pb] = cands[ci];
            auto dist_after = [&](int la, int lb) {
                int qa = layout[la], qb = layout[lb];
                if (qa == pa) qa = pb; else if (qa == pb) qa = pa;
                if (qb == pa) qb = pb; else if (qb == pb) qb = pa;
                return double(g.dist[qa][qb]);
            };
            double score = 0.0;
            for (auto& [la, lb] : front_pairs) score += dist_after(la, lb);
            for (auto& [la, lb] : look_pairs) score += 0.5 * dist_after(la, lb);
            if (score < best - 1e-12) { best = score; best_idx = {ci}; }
            else if (score <= best + 1e-12) best_idx.push_back(ci);
        }
        auto [pa, pb] = cands[best_idx[rng.below(best_idx.size())]];

        // Emit the SWAP as three CNOTs and update the layout.
        out.gates.push_back(GateOp::cnot(pa, pb));
        out.gates.push_back(GateOp::cnot(pb, pa));
        out.gates.push_back(GateOp::cnot(pa, pb));
        out.cnots += 3;
        int la = log_at[pa], lb = log_at[pb];
        std::swap(layout[la], layout[lb]);
        last_swap = {pa, pb};
        if (++swap_guard > swap_cap) throw std::runtime_error("router: swap budget exceeded");
    }

    out.final_layout = layout;
    return out;
}

} // namespace detail

// Routes a logical circuit onto the device, returning the attempt with the
// lowest two-qubit gate count over `trials` random initial layouts, with the
// ASAP schedule's idle intervals materialized as Idle placeholders. Delays
// shorter than 1e-4 * T_idle are dropped; delays after a qubit's last gate
// (terminal, pre-measurement) are never created in the first place.
inline RoutedCircuit route_circuit(const std::vector<GateOp>& logical, const DeviceModel& dev,
                                   int n_q, int trials, RandomSource& rng) {
    if (trials < 1) throw std::invalid_argument("route_circuit: trials < 1");
    DeviceGraph g = build_device_graph(dev, n_q);

    detail::RouteAttempt best;
    bool have = false;
    const bool trivial = dev.connectivity == Connectivity::all_to_all;
    int eff_trials = trivial ? 1 : trials;
    for (int t = 0; t < eff_trials; ++t) {
        std::vector<int> layout(n_q);
        for (int i = 0; i < n_q; ++i) layout[i] = i;
        if (!trivial && t > 0) { // trial 0 keeps the identity layout
            for (int i = n_q - 1; i > 0; --i)
                std::swap(layout[i], layout[std::size_t(rng.below(std::uint64_t(i) + 1))]);
        }
        auto att = detail::route_once(logical, g, layout, rng);
        if (!have || att.cnots < best.cnots) { best = std::move(att); have = true; }
    }

    RoutedCircuit rc;
    rc.n_q = n_q;
    rc.init_layout = best.init_layout;
    rc.final_layout = best.final_layout;

    // ASAP schedule with per-qubit clocks; insert idle placeholders for gaps.
    auto [t1, t2] = dev.idle_times();
    const double min_delay = std::isinf(dev.quality)
                                 ? std::numeric_limits<double>::infinity()
                                 : 1e-4 * dev.t_idle();
    std::vector<double> clock(n_q, 0.0);
    for (const GateOp& gt : best.gates) {
        double dur = gt.q1 >= 0 ? dev.t_2q : dev.t_1q;
        int qs[2] = {gt.q0, gt.q1};
        int nq = gt.q1 >= 0 ? 2 : 1;
        double start = 0.0;
        for (int j = 0; j < nq; ++j) start = std::max(start, clock[qs[j]]);
        for (int j = 0; j < nq; ++j) {
            double gap = start - clock[qs[j]];
            if (gap >= min_delay) {
                GateOp idle;
                idle.kind = GateKind::Idle;
                idle.q0 = qs[j];
                idle.q1 = -1;
                idle.duration = gap;
                idle.idle = IdleNoiseSpec{t1, t2, gap};
                rc.gates.push_back(idle);
                rc.stats.total_idle += gap;
            }
            clock[qs[j]] = start + dur;
        }
        GateOp out = gt;
        out.duration = dur;
        out.gate_eps = gt.q1 >= 0 ? dev.eps_2q() : dev.eps_1q();
        rc.gates.push_back(out);
        if (gt.q1 >= 0) ++rc.stats.two_qubit; else ++rc.stats.one_qubit;
    }
    return rc;
}

} // namespace rps
