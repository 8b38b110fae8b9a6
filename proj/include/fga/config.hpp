#pragma once

#include "fga/dynamics.hpp"
#include "fga/medium.hpp"
#include "fga/phase_space.hpp"
#include "fga/types.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fga {

struct InitialSpec {
    enum class Kind { CoherentState, Wkb, Zero };
    Kind kind = Kind::CoherentState;
    Vec3 q0 = Vec3::Constant(kPi);
    Vec3 p0 = Vec3(0.6, 0.0, 0.8);
    std::string polarization = "p";  // p | sv | sh | explicit components
    CVec3 pol_vector = CVec3::Zero();
    double sigma = 0.0;              // wkb envelope width
    cd amplitude = 1.0;              // wkb only
    cd u1_factor = 0.0;

    CVec3 resolved_polarization() const {
        const Frame f = initial_frame(p0);
        if (polarization == "p") return f.np.cast<cd>();
        if (polarization == "sv") return f.nsv.cast<cd>();
        if (polarization == "sh") return f.nsh.cast<cd>();
        return pol_vector;
    }

    GaussianData data(double eps) const {
        GaussianData d = kind == Kind::Wkb
                             ? GaussianData::wkb(q0, p0, sigma, resolved_polarization())
                             : GaussianData::coherent_state(eps, q0, p0, resolved_polarization());
        if (kind == Kind::Wkb) d.amplitude = amplitude;
        if (kind == Kind::Zero) d.amplitude = 0.0;
        d.u1_factor = u1_factor;
        return d;
    }
};

struct MeshSpec {
    double spacing_factor = 0.75;  // phase-space spacing in units of sqrt(2 eps)
    double extent = 3.0;           // half-width in spreads of the transformed data
    double dx_factor = 0.9;        // x spacing as a fraction of the Nyquist bound
    double box_length = 2.0 * kPi;
    int box_n = 0;                 // 0 picks the coarsest admissible size
};

struct DynamicsSpec {
    double dt = 1e-2;
    double T = 0.5;
    std::vector<double> output_times;  // empty means {T}
    FrameMode frame_mode = FrameMode::Convention;
    double momentum_floor = 0.0;       // 0 means delta / 2

    std::vector<double> times() const { return output_times.empty() ? std::vector<double>{T} : output_times; }
};

struct SynthesisSpec {
    double r_cut = 6.0;
    double prune_tol = 1e-5;
    bool lattice = true;
};

struct ValidateSpec {
    int rays = 6;
    int samples = 10;
    int eigen_samples = 100;
    double symplectic = 1e-8;
    double hamiltonian = 1e-8;
    double coupling = 1e-8;
    double covariance = 1e-8;
    double det_floor = 1e-6;
    double trace = 1e-6;
    double eigen = 1e-10;
};

struct FgaConfig {
    double eps = 1.0 / 32;
    std::vector<double> eps_list;  // empty means {eps}
    double delta = 0.1;
    std::uint64_t seed = 1;
    double tail_tol = 1e-3;  // tail-mass ratio above which data count as not high frequency
    double min_slope = 0.8;
    MediumModel medium = MediumModel::constant(2.0, 1.0, 1.0);
    InitialSpec initial;
    MeshSpec mesh;
    DynamicsSpec dynamics;
    SynthesisSpec synthesis;
    ValidateSpec validate;
    std::string source = "<defaults>";
    std::uint64_t hash = 0;

    std::vector<double> eps_values() const { return eps_list.empty() ? std::vector<double>{eps} : eps_list; }
    double momentum_floor() const {
        return dynamics.momentum_floor > 0.0 ? dynamics.momentum_floor : 0.5 * delta;
    }
};

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct IniValue {
    std::string text;
    int line = 0;
};

class IniReader {
public:
    IniReader(const std::map<std::string, IniValue>& kv, std::string source)
        : kv_(kv), source_(std::move(source)) {}

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        const auto it = kv_.find(key);
        const std::string where =
            it == kv_.end() ? source_ : source_ + ":" + std::to_string(it->second.line);
        throw Error(ErrorCode::ConfigError, where + ": " + key + ": " + msg);
    }

    bool has(const std::string& key) {
        used_.insert(key);
        return kv_.count(key) > 0;
    }

    std::vector<double> numbers(const std::string& key) {
        std::istringstream in(kv_.at(key).text);
        std::vector<double> v;
        std::string tok;
        while (in >> tok) {
            std::size_t pos = 0;
            double x;
            try {
                x = std::stod(tok, &pos);
            } catch (...) {
                fail(key, "not a number: '" + tok + "'");
            }
            if (pos != tok.size()) fail(key, "not a number: '" + tok + "'");
            v.push_back(x);
        }
        return v;
    }

    void get(const std::string& key, double& out) {
        if (!has(key)) return;
        const auto v = numbers(key);
        if (v.size() != 1) fail(key, "expected one number");
        out = v[0];
    }
    void get(const std::string& key, int& out) {
        double d = out;
        get(key, d);
        if (d != std::floor(d)) fail(key, "expected an integer");
        out = static_cast<int>(d);
    }
    void get(const std::string& key, std::uint64_t& out) {
        double d = static_cast<double>(out);
        get(key, d);
        if (d < 0 || d != std::floor(d)) fail(key, "expected a non-negative integer");
        out = static_cast<std::uint64_t>(d);
    }
    void get(const std::string& key, Vec3& out) {
        if (!has(key)) return;
        const auto v = numbers(key);
        if (v.size() != 3) fail(key, "expected three numbers");
        out = Vec3(v[0], v[1], v[2]);
    }
    void get(const std::string& key, std::vector<double>& out) {
        if (has(key)) out = numbers(key);
    }
    void get(const std::string& key, bool& out) {
        if (!has(key)) return;
        const std::string& t = kv_.at(key).text;
        if (t == "true" || t == "1" || t == "yes") out = true;
        else if (t == "false" || t == "0" || t == "no") out = false;
        else fail(key, "expected true or false");
    }
    void get(const std::string& key, cd& out) {
        if (!has(key)) return;
        const auto v = numbers(key);
        if (v.size() == 1) out = v[0];
        else if (v.size() == 2) out = cd(v[0], v[1]);
        else fail(key, "expected re or 're im'");
    }
    std::string word(const std::string& key, const std::string& def) {
        return has(key) ? kv_.at(key).text : def;
    }

    void reject_unknown() const {
        for (const auto& [k, v] : kv_)
            if (!used_.count(k)) fail(k, "unknown key");
    }

private:
    const std::map<std::string, IniValue>& kv_;
    std::string source_;
    std::set<std::string> used_;
};

}  // namespace detail

// Sections [run] [medium] [initial] [mesh] [dynamics] [synthesis] [validate];
// keys are `name = value`, `#` and `;` start comments.
inline FgaConfig parse_config(const std::string& text, const std::string& source = "<string>") {
    std::map<std::string, detail::IniValue> kv;
    static const std::set<std::string> sections = {"run",      "medium",    "initial", "mesh",
                                                   "dynamics", "synthesis", "validate"};
    std::istringstream in(text);
    std::string raw, section;
    int lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw Error(ErrorCode::ConfigError, source + ":" + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find_first_of("#;");
        const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail("malformed section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            if (!sections.count(section)) fail("unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail("expected key = value");
        if (section.empty()) fail("key outside of a section");
        const std::string key = section + "." + detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (val.empty()) fail("empty value for " + key);
        if (kv.count(key)) fail("duplicate key " + key);
        kv[key] = {val, lineno};
    }

    FgaConfig c;
    c.source = source;
    detail::IniReader r(kv, source);
    r.get("run.eps", c.eps);
    r.get("run.eps_list", c.eps_list);
    r.get("run.delta", c.delta);
    r.get("run.seed", c.seed);
    r.get("run.tail_tol", c.tail_tol);
    r.get("run.min_slope", c.min_slope);

    const std::string kind = r.word("medium.kind", "constant");
    double lam = 2.0, mu = 1.0, rho = 1.0, amp = 0.5, width = 0.6;
    Vec3 center = Vec3::Zero();
    r.get("medium.lambda", lam);
    r.get("medium.mu", mu);
    r.get("medium.rho", rho);
    if (kind == "constant") {
        c.medium = MediumModel::constant(lam, mu, rho);
    } else if (kind == "gaussian_density") {
        r.get("medium.amplitude", amp);
        r.get("medium.width", width);
        r.get("medium.center", center);
        if (!(width > 0.0)) r.fail("medium.width", "must be positive");
        c.medium = MediumModel::gaussian_density(lam, mu, rho, amp, width, center);
    } else {
        r.fail("medium.kind", "expected constant or gaussian_density");
    }
    if (!(rho > 0.0) || !(mu > 0.0) || !(lam + 2.0 * mu > 0.0) || !(1.0 + std::min(0.0, amp) > 0.0))
        r.fail("medium.kind", "non-physical material parameters");

    InitialSpec& ini = c.initial;
    const std::string ik = r.word("initial.kind", "coherent_state");
    if (ik == "coherent_state") ini.kind = InitialSpec::Kind::CoherentState;
    else if (ik == "wkb") ini.kind = InitialSpec::Kind::Wkb;
    else if (ik == "zero") ini.kind = InitialSpec::Kind::Zero;
    else r.fail("initial.kind", "expected coherent_state, wkb or zero");
    r.get("initial.q0", ini.q0);
    r.get("initial.p0", ini.p0);
    r.get("initial.u1_factor", ini.u1_factor);
    if (ini.kind == InitialSpec::Kind::Wkb) {
        r.get("initial.sigma", ini.sigma);
        r.get("initial.amplitude", ini.amplitude);
        if (!(ini.sigma > 0.0)) r.fail("initial.sigma", "wkb data needs sigma > 0");
    }
    if (r.has("initial.polarization")) {
        const std::string w = r.word("initial.polarization", "p");
        if (w == "p" || w == "sv" || w == "sh") {
            ini.polarization = w;
        } else {
            const auto v = r.numbers("initial.polarization");
            ini.polarization = "explicit";
            if (v.size() == 3) ini.pol_vector = CVec3(v[0], v[1], v[2]);
            else if (v.size() == 6) ini.pol_vector = CVec3(cd(v[0], v[1]), cd(v[2], v[3]), cd(v[4], v[5]));
            else r.fail("initial.polarization", "expected p, sv, sh, 3 reals or 3 're im' pairs");
        }
    }
    if (!(ini.p0.norm() > 0.0)) r.fail("initial.p0", "must be nonzero");

    r.get("mesh.spacing_factor", c.mesh.spacing_factor);
    r.get("mesh.extent", c.mesh.extent);
    r.get("mesh.dx_factor", c.mesh.dx_factor);
    r.get("mesh.box_length", c.mesh.box_length);
    r.get("mesh.box_n", c.mesh.box_n);

    r.get("dynamics.dt", c.dynamics.dt);
    r.get("dynamics.T", c.dynamics.T);
    r.get("dynamics.output_times", c.dynamics.output_times);
    r.get("dynamics.momentum_floor", c.dynamics.momentum_floor);
    const std::string fm = r.word("dynamics.frame_mode", "convention");
    if (fm == "convention") c.dynamics.frame_mode = FrameMode::Convention;
    else if (fm == "parallel_transport") c.dynamics.frame_mode = FrameMode::ParallelTransport;
    else r.fail("dynamics.frame_mode", "expected convention or parallel_transport");

    r.get("synthesis.r_cut", c.synthesis.r_cut);
    r.get("synthesis.prune_tol", c.synthesis.prune_tol);
    r.get("synthesis.lattice", c.synthesis.lattice);

    ValidateSpec& v = c.validate;
    r.get("validate.rays", v.rays);
    r.get("validate.samples", v.samples);
    r.get("validate.eigen_samples", v.eigen_samples);
    r.get("validate.symplectic", v.symplectic);
    r.get("validate.hamiltonian", v.hamiltonian);
    r.get("validate.coupling", v.coupling);
    r.get("validate.covariance", v.covariance);
    r.get("validate.det_floor", v.det_floor);
    r.get("validate.trace", v.trace);
    r.get("validate.eigen", v.eigen);
    r.reject_unknown();

    auto positive = [&](const char* key, double x) {
        if (!(x > 0.0) || !std::isfinite(x)) r.fail(key, "must be positive and finite");
    };
    positive("run.eps", c.eps);
    for (double e : c.eps_list) positive("run.eps_list", e);
    positive("run.delta", c.delta);
    positive("dynamics.dt", c.dynamics.dt);
    if (!(c.dynamics.T >= 0.0) || !std::isfinite(c.dynamics.T)) r.fail("dynamics.T", "must be >= 0");
    double last = 0.0;
    for (double t : c.dynamics.output_times) {
        if (!(t > last) || t > c.dynamics.T) r.fail("dynamics.output_times", "must increase within (0, T]");
        last = t;
    }
    positive("mesh.spacing_factor", c.mesh.spacing_factor);
    positive("mesh.extent", c.mesh.extent);
    positive("mesh.box_length", c.mesh.box_length);
    if (!(c.mesh.dx_factor > 0.0 && c.mesh.dx_factor <= 1.0)) r.fail("mesh.dx_factor", "must lie in (0, 1]");
    if (c.mesh.box_n < 0) r.fail("mesh.box_n", "must be >= 0");
    positive("synthesis.r_cut", c.synthesis.r_cut);
    if (!(c.synthesis.prune_tol >= 0.0)) r.fail("synthesis.prune_tol", "must be >= 0");
    if (v.rays < 1 || v.samples < 1 || v.eigen_samples < 0) r.fail("validate.rays", "counts must be positive");

    // Nyquist guard for an explicit box size.
    if (c.mesh.box_n > 0) {
        for (double e : c.eps_values()) {
            const PhaseMesh m = mesh_for(ini.data(e), e, c.mesh.spacing_factor, c.mesh.extent, c.delta);
            const double dx = c.mesh.box_length / c.mesh.box_n, bound = kPi * e / m.max_momentum();
            if (dx > bound) {
                const auto it = kv.find("mesh.box_n");
                throw Error(ErrorCode::MeshTooCoarse,
                            source + ":" + std::to_string(it->second.line) + ": mesh.box_n: dx = " +
                                std::to_string(dx) + " exceeds pi eps / pmax = " + std::to_string(bound) +
                                " at eps = " + std::to_string(e));
            }
        }
    }

    std::string canon;
    for (const auto& [k, val] : kv) canon += k + "=" + val.text + "\n";
    c.hash = fnv1a(canon);
    return c;
}

inline FgaConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::ConfigError, path + ": cannot open");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path);
}

}  // namespace fga
