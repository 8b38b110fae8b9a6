#pragma once

#include "fga/phase_space.hpp"
#include "fga/synthesis.hpp"
#include "fga/types.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fga {

// Shortest decimal text that reads back to the same double.
inline std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct Provenance {
    std::string config_hash;
    std::string version = kVersion;
};

class Csv {
public:
    Csv(const Provenance& prov, const std::vector<std::string>& columns) {
        text_ = "# config_hash=" + prov.config_hash + " version=" + prov.version + "\n";
        row_strings(columns);
    }

    Csv& row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text_ += ',';
            text_ += cells[i];
        }
        text_ += '\n';
        return *this;
    }

    const std::string& text() const { return text_; }

private:
    std::string text_;
};

namespace detail {

inline void put_f64(std::string& out, double x) {
    std::uint64_t b = std::bit_cast<std::uint64_t>(x);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((b >> (8 * i)) & 0xff));
}

inline double get_f64(const char* p) {
    std::uint64_t b = 0;
    for (int i = 0; i < 8; ++i) b |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return std::bit_cast<double>(b);
}

inline void put_complex(std::string& out, const std::vector<cd>& v) {
    for (const cd& z : v) {
        put_f64(out, z.real());
        put_f64(out, z.imag());
    }
}

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write failed for " + path);
}

}  // namespace detail

inline void write_text(const std::string& path, const std::string& text) { detail::write_file(path, text); }

// Text header terminated by "end\n", then per field all nodes as (re, im)
// little-endian float64 pairs, vector components interleaved per node.
inline std::string encode_grid(const WaveField& w, const Provenance& prov) {
    std::ostringstream h;
    const Grid3& g = w.grid;
    h << "FGAGRID1\n";
    h << "dims " << g.axes[0].n << ' ' << g.axes[1].n << ' ' << g.axes[2].n << '\n';
    h << "origin " << fmt(g.axes[0].origin) << ' ' << fmt(g.axes[1].origin) << ' ' << fmt(g.axes[2].origin) << '\n';
    h << "spacing " << fmt(g.axes[0].spacing) << ' ' << fmt(g.axes[1].spacing) << ' ' << fmt(g.axes[2].spacing)
      << '\n';
    h << "extents";
    for (int d = 0; d < 3; ++d) h << ' ' << fmt(g.axes[d].origin) << ' ' << fmt(g.axes[d].last());
    h << '\n';
    h << "eps " << fmt(w.eps) << '\n' << "t " << fmt(w.t) << '\n';
    h << "fields u:3";
    if (w.has_derived()) h << " du_dt:3 div_u:1 curl_u:3";
    h << '\n';
    h << "config_hash " << prov.config_hash << '\n' << "version " << prov.version << '\n' << "end\n";
    std::string out = h.str();
    detail::put_complex(out, w.u);
    if (w.has_derived()) {
        detail::put_complex(out, w.du_dt);
        detail::put_complex(out, w.div_u);
        detail::put_complex(out, w.curl_u);
    }
    return out;
}

inline void write_grid(const std::string& path, const WaveField& w, const Provenance& prov) {
    detail::write_file(path, encode_grid(w, prov));
}

inline WaveField decode_grid(const std::string& bytes) {
    std::size_t pos = 0;
    auto next_line = [&]() {
        const auto e = bytes.find('\n', pos);
        if (e == std::string::npos) throw Error(ErrorCode::GridMismatch, "truncated grid header");
        std::string l = bytes.substr(pos, e - pos);
        pos = e + 1;
        return l;
    };
    if (next_line() != "FGAGRID1") throw Error(ErrorCode::GridMismatch, "bad grid magic");
    Grid3 g;
    double eps = 0.0, t = 0.0;
    bool derived = false;
    for (std::string l = next_line(); l != "end"; l = next_line()) {
        std::istringstream in(l);
        std::string key;
        in >> key;
        if (key == "dims") in >> g.axes[0].n >> g.axes[1].n >> g.axes[2].n;
        else if (key == "origin") in >> g.axes[0].origin >> g.axes[1].origin >> g.axes[2].origin;
        else if (key == "spacing") in >> g.axes[0].spacing >> g.axes[1].spacing >> g.axes[2].spacing;
        else if (key == "eps") in >> eps;
        else if (key == "t") in >> t;
        else if (key == "fields") derived = l.find("du_dt") != std::string::npos;
    }
    WaveField w(g, eps, derived);
    w.t = t;
    auto read = [&](std::vector<cd>& v) {
        if (bytes.size() < pos + 16 * v.size()) throw Error(ErrorCode::GridMismatch, "truncated grid data");
        for (cd& z : v) {
            z = cd(detail::get_f64(bytes.data() + pos), detail::get_f64(bytes.data() + pos + 8));
            pos += 16;
        }
    };
    read(w.u);
    if (derived) {
        read(w.du_dt);
        read(w.div_u);
        read(w.curl_u);
    }
    return w;
}

inline WaveField read_grid(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::GridMismatch, "cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return decode_grid(ss.str());
}

// Mesh metadata header, then one complex array per branch in node order.
inline std::string encode_amplitudes(const AmplitudeField& a, const Provenance& prov) {
    std::ostringstream h;
    h << "FGAAMPL1\n";
    for (int d = 0; d < 3; ++d) {
        const Axis& q = a.mesh.q_axes[d];
        const Axis& p = a.mesh.p_axes[d];
        h << "q_axis " << d << ' ' << fmt(q.origin) << ' ' << fmt(q.spacing) << ' ' << q.n << '\n';
        h << "p_axis " << d << ' ' << fmt(p.origin) << ' ' << fmt(p.spacing) << ' ' << p.n << '\n';
    }
    h << "exclusion " << fmt(a.mesh.exclusion_radius) << '\n';
    h << "eps " << fmt(a.eps) << '\n' << "delta " << fmt(a.delta) << '\n';
    h << "nodes " << a.mesh.node_count() << '\n';
    h << "branches";
    for (int b = 0; b < kBranchCount; ++b) h << ' ' << amp_branch_name(b);
    h << '\n';
    h << "config_hash " << prov.config_hash << '\n' << "version " << prov.version << '\n' << "end\n";
    std::string out = h.str();
    for (int b = 0; b < kBranchCount; ++b) detail::put_complex(out, a.alpha[b]);
    return out;
}

inline void write_amplitudes(const std::string& path, const AmplitudeField& a, const Provenance& prov) {
    detail::write_file(path, encode_amplitudes(a, prov));
}

}  // namespace fga
