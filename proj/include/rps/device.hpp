#pragma once
// Hardware profiles: connectivity, fidelities, idle timescales, readout.
//
// Presets A/B/C encode the hardware table verbatim. Note the body text
// elsewhere quotes eps_r = 0.1 for devices A and B; the table's 99.9%
// readout (eps_r = 1e-3) is the value adopted here.

#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "rps/noise.hpp"

namespace rps {

enum class Connectivity { all_to_all, square_lattice };
enum class IdleKind { t1_dominated, t2_dominated };

struct DeviceModel {
    std::string name = "ideal";
    Connectivity connectivity = Connectivity::all_to_all;
    double f_1q = 1.0;
    double f_2q = 1.0;
    IdleKind idle_kind = IdleKind::t2_dominated;
    double quality = std::numeric_limits<double>::infinity(); // T_idle / t_2q
    double eps_r = 0.0;
    double t_1q = 0.1; // in units of t_2q
    double t_2q = 1.0;

    double eps_1q() const { return gate_error_params(f_1q, f_2q).first; }
    double eps_2q() const { return gate_error_params(f_1q, f_2q).second; }

    // Characteristic idle time constant in t_2q units.
    double t_idle() const { return quality * t_2q; }

    // (T1, T2) in t_2q units per the dominant mechanism: T1-dominated means
    // T2 = 2 T1 (no pure dephasing); T2-dominated means T1 = infinity.
    std::pair<double, double> idle_times() const {
        if (std::isinf(quality)) return {INFINITY, INFINITY};
        if (idle_kind == IdleKind::t1_dominated) return {t_idle(), 2.0 * t_idle()};
        return {INFINITY, t_idle()};
    }
};

inline DeviceModel device_a() {
    return {"A", Connectivity::all_to_all, 0.9999, 0.99, IdleKind::t2_dominated, 1e6, 1e-3, 0.1, 1.0};
}
inline DeviceModel device_b() {
    return {"B", Connectivity::square_lattice, 0.9999, 0.999, IdleKind::t1_dominated, 2e3, 1e-3, 0.1, 1.0};
}
inline DeviceModel device_c() {
    return {"C", Connectivity::square_lattice, 0.9999, 0.99, IdleKind::t2_dominated, 2e2, 1e-2, 0.1, 1.0};
}

inline DeviceModel device_preset(const std::string& name) {
    if (name == "A") return device_a();
    if (name == "B") return device_b();
    if (name == "C") return device_c();
    throw std::invalid_argument("unknown device preset: " + name);
}

// Coupling graph over exactly n_q physical nodes. Square lattices place the
// nodes row-major on a near-square grid (rows = ceil(sqrt(n_q))), which is a
// connected induced subgraph of the infinite lattice.
struct DeviceGraph {
    int n_q = 0;
    std::vector<std::vector<int>> adj;
    std::vector<std::vector<int>> dist;

    bool adjacent(int a, int b) const {
        for (int x : adj[a]) if (x == b) return true;
        return false;
    }
};

inline DeviceGraph build_device_graph(const DeviceModel& dev, int n_q) {
    if (n_q < 1) throw std::invalid_argument("build_device_graph: n_q < 1");
    DeviceGraph g;
    g.n_q = n_q;
    g.adj.assign(n_q, {});
    if (dev.connectivity == Connectivity::all_to_all) {
        for (int a = 0; a < n_q; ++a)
            for (int b = 0; b < n_q; ++b)
                if (a != b) g.adj[a].push_back(b);
    } else {
        int rows = int(std::ceil(std::sqrt(double(n_q))));
        int cols = (n_q + rows - 1) / rows;
        auto id = [&](int r, int c) { return r * cols + c; };
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                int a = id(r, c);
                if (a >= n_q) continue;
                if (c + 1 < cols && id(r, c + 1) < n_q) {
                    g.adj[a].push_back(id(r, c + 1));
                    g.adj[id(r, c + 1)].push_back(a);
                }
                if (r + 1 < rows && id(r + 1, c) < n_q) {
                    g.adj[a].push_back(id(r + 1, c));
                    g.adj[id(r + 1, c)].push_back(a);
                }
            }
        }
    }
    // All-pairs BFS distances.
    g.dist.assign(n_q, std::vector<int>(n_q, -1));
    for (int s = 0; s < n_q; ++s) {
        std::queue<int> q;
        q.push(s);
        g.dist[s][s] = 0;
        while (!q.empty()) {
            int u = q.front(); q.pop();
            for (int v : g.adj[u])
                if (g.dist[s][v] < 0) { g.dist[s][v] = g.dist[s][u] + 1; q.push(v); }
        }
        for (int v = 0; v < n_q; ++v)
            if (g.dist[s][v] < 0) throw std::runtime_error("device graph disconnected");
    }
    return g;
}

} // namespace rps
