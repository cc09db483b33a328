#include "splitgrid/io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace splitgrid {

namespace fs = std::filesystem;

std::string format_double(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

namespace {

double parse_double(const std::string& file, int line, const std::string& tok) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size())
        throw ParseError(file, line, "expected number, got '" + tok + "'");
    return v;
}

int parse_int(const std::string& file, int line, const std::string& tok) {
    int v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size())
        throw ParseError(file, line, "expected integer, got '" + tok + "'");
    return v;
}

std::vector<std::string> tokenize(const std::string& line) {
    std::istringstream ss(line);
    std::vector<std::string> toks;
    std::string t;
    while (ss >> t) {
        if (t[0] == '#') break;  // comment to end of line
        toks.push_back(t);
    }
    return toks;
}

/// Key-value tail parser: "p 0.1 q 0.05" -> {p: 0.1, q: 0.05}.
std::map<std::string, double> kv_tail(const std::string& file, int line,
                                      const std::vector<std::string>& toks, size_t from) {
    if ((toks.size() - from) % 2 != 0)
        throw ParseError(file, line, "expected key value pairs");
    std::map<std::string, double> kv;
    for (size_t i = from; i < toks.size(); i += 2)
        kv[toks[i]] = parse_double(file, line, toks[i + 1]);
    return kv;
}

double need(const std::string& file, int line, const std::map<std::string, double>& kv,
            const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError(file, line, "missing field '" + key + "'");
    return it->second;
}

std::ifstream open_for_read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

}  // namespace

NetworkCase load_case(const std::string& path) {
    std::ifstream in = open_for_read(path);
    NetworkCase c;
    bool saw_header = false, saw_units = false;

    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        auto toks = tokenize(line);
        if (toks.empty()) continue;

        if (!saw_header) {
            if (toks.size() != 2 || toks[0] != "case-format" || toks[1] != "1")
                throw ParseError(path, ln, "expected 'case-format 1' header");
            saw_header = true;
            continue;
        }

        const std::string& kw = toks[0];
        if (kw == "units") {
            if (toks.size() != 2 || (toks[1] != "pu" && toks[1] != "si"))
                throw ParseError(path, ln, "units must be 'pu' or 'si'");
            c.base.per_unit = toks[1] == "pu";
            saw_units = true;
        } else if (kw == "sbase") {
            if (toks.size() != 2) throw ParseError(path, ln, "sbase takes one value");
            c.base.s_base = parse_double(path, ln, toks[1]);
        } else if (kw == "vbase") {
            if (toks.size() != 2) throw ParseError(path, ln, "vbase takes one value");
            c.base.v_base = parse_double(path, ln, toks[1]);
        } else if (kw == "bus") {
            if (toks.size() < 3) throw ParseError(path, ln, "bus needs id and type");
            NodeId id = parse_int(path, ln, toks[1]);
            const std::string& type = toks[2];
            Bus bus{id, PQLoad{}};
            if (type == "slack") {
                auto kv = kv_tail(path, ln, toks, 3);
                bus.device = SlackSource{{need(path, ln, kv, "vre"), need(path, ln, kv, "vim")}};
            } else if (type == "pq") {
                auto kv = kv_tail(path, ln, toks, 3);
                bus.device = PQLoad{need(path, ln, kv, "p"), need(path, ln, kv, "q")};
            } else if (type == "zip") {
                auto kv = kv_tail(path, ln, toks, 3);
                bus.device = ZipLoad{need(path, ln, kv, "p0"), need(path, ln, kv, "q0"),
                                     need(path, ln, kv, "ap"), need(path, ln, kv, "bp"),
                                     need(path, ln, kv, "cp"), need(path, ln, kv, "aq"),
                                     need(path, ln, kv, "bq"), need(path, ln, kv, "cq")};
            } else if (type == "exp") {
                auto kv = kv_tail(path, ln, toks, 3);
                bus.device = ExpLoad{need(path, ln, kv, "p0"), need(path, ln, kv, "q0"),
                                     need(path, ln, kv, "pv"), need(path, ln, kv, "qv")};
            } else if (type == "pv") {
                auto kv = kv_tail(path, ln, toks, 3);
                bus.device = PvBus{need(path, ln, kv, "p"), need(path, ln, kv, "vmag")};
            } else if (type == "im") {
                auto kv = kv_tail(path, ln, toks, 3);
                ImDevice im;
                im.params.r_s = need(path, ln, kv, "rs");
                im.params.x_s = need(path, ln, kv, "xs");
                im.params.x_m = need(path, ln, kv, "xm");
                im.params.r_r = need(path, ln, kv, "rr");
                im.params.poles = static_cast<int>(need(path, ln, kv, "poles"));
                im.params.omega_s = need(path, ln, kv, "omegas");
                im.torque = need(path, ln, kv, "torque");
                bus.device = im;
            } else if (type == "glass") {
                if (toks.size() != 4)
                    throw ParseError(path, ln, "glass bus needs a template path");
                fs::path tp = toks[3];
                if (tp.is_relative()) tp = fs::path(path).parent_path() / tp;
                bus.device = GlassDevice{load_template(tp.string())};
            } else {
                throw ParseError(path, ln, "unknown bus type '" + type + "'");
            }
            c.buses.push_back(std::move(bus));
        } else if (kw == "branch") {
            if (toks.size() < 3) throw ParseError(path, ln, "branch needs endpoints");
            Branch br;
            br.from = parse_int(path, ln, toks[1]);
            br.to = parse_int(path, ln, toks[2]);
            auto kv = kv_tail(path, ln, toks, 3);
            br.r = kv.count("r") ? kv["r"] : 0.0;
            br.x = kv.count("x") ? kv["x"] : 0.0;
            br.b_sh = kv.count("bsh") ? kv["bsh"] : 0.0;
            c.branches.push_back(br);
        } else {
            throw ParseError(path, ln, "unknown directive '" + kw + "'");
        }
    }
    if (!saw_header) throw ParseError(path, 1, "empty case file");
    if (!saw_units) throw ParseError(path, ln, "missing 'units' declaration");

    validate_case(c);
    return normalize_case(c);
}

// ---------------------------------------------------------------------------
// Measurements CSV
// ---------------------------------------------------------------------------

std::vector<MeasurementRecord> load_measurements(const std::string& path) {
    std::ifstream in = open_for_read(path);
    std::string line;
    int ln = 0;
    if (!std::getline(in, line)) throw ParseError(path, 1, "missing CSV header");
    ++ln;
    // Tolerate a trailing \r from foreign line endings.
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "time,v_re,v_im,i_re,i_im,tag")
        throw ParseError(path, 1, "expected header time,v_re,v_im,i_re,i_im,tag");

    std::vector<MeasurementRecord> out;
    while (std::getline(in, line)) {
        ++ln;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string cur;
        for (char ch : line) {
            if (ch == ',') { fields.push_back(cur); cur.clear(); }
            else cur += ch;
        }
        fields.push_back(cur);
        if (fields.size() != 6)
            throw ParseError(path, ln, "expected 6 fields, got " + std::to_string(fields.size()));
        MeasurementRecord r;
        if (!fields[0].empty()) r.time = parse_double(path, ln, fields[0]);
        r.v.re = parse_double(path, ln, fields[1]);
        r.v.im = parse_double(path, ln, fields[2]);
        r.i.re = parse_double(path, ln, fields[3]);
        r.i.im = parse_double(path, ln, fields[4]);
        if (!fields[5].empty()) r.tag = parse_double(path, ln, fields[5]);
        out.push_back(r);
    }
    return out;
}

void save_measurements(std::span<const MeasurementRecord> records,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "time,v_re,v_im,i_re,i_im,tag\n";
    for (const auto& r : records) {
        if (r.time) out << format_double(*r.time);
        out << ',' << format_double(r.v.re) << ',' << format_double(r.v.im)
            << ',' << format_double(r.i.re) << ',' << format_double(r.i.im) << ',';
        if (r.tag) out << format_double(*r.tag);
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Template files
// ---------------------------------------------------------------------------

GlassTemplate load_template(const std::string& path) {
    std::ifstream in = open_for_read(path);
    GlassTemplate t;
    bool saw_header = false, saw_order = false;
    std::vector<std::tuple<char, int, int, double>> coeffs;

    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        auto toks = tokenize(line);
        if (toks.empty()) continue;
        if (!saw_header) {
            if (toks.size() != 2 || toks[0] != "glass-template" || toks[1] != "1")
                throw ParseError(path, ln, "expected 'glass-template 1' header");
            saw_header = true;
            continue;
        }
        const std::string& kw = toks[0];
        if (kw == "kind") {
            if (toks.size() != 2 || (toks[1] != "voltage" && toks[1] != "current"))
                throw ParseError(path, ln, "kind must be 'voltage' or 'current'");
            t.kind = toks[1] == "voltage" ? GlassKind::VoltageDependent
                                          : GlassKind::CurrentDependent;
        } else if (kw == "order") {
            if (toks.size() != 2) throw ParseError(path, ln, "order takes one value");
            t.order = parse_int(path, ln, toks[1]);
            if (t.order < 0 || t.order > kMaxGlassOrder)
                throw ParseError(path, ln, "order outside [0, 6]");
            saw_order = true;
        } else if (kw == "center") {
            if (toks.size() != 3) throw ParseError(path, ln, "center takes two values");
            t.center = {parse_double(path, ln, toks[1]), parse_double(path, ln, toks[2])};
        } else if (kw == "range") {
            if (toks.size() != 5) throw ParseError(path, ln, "range takes four values");
            t.range_r = {parse_double(path, ln, toks[1]), parse_double(path, ln, toks[2])};
            t.range_i = {parse_double(path, ln, toks[3]), parse_double(path, ln, toks[4])};
        } else if (kw == "coeff") {
            if (toks.size() != 5 || (toks[1] != "r" && toks[1] != "i"))
                throw ParseError(path, ln, "expected 'coeff r|i e_R e_I value'");
            coeffs.emplace_back(toks[1][0], parse_int(path, ln, toks[2]),
                                parse_int(path, ln, toks[3]),
                                parse_double(path, ln, toks[4]));
        } else {
            throw ParseError(path, ln, "unknown directive '" + kw + "'");
        }
    }
    if (!saw_header) throw ParseError(path, 1, "empty template file");
    if (!saw_order) throw ParseError(path, ln, "missing 'order'");

    const int m = basis_size(t.order);
    t.coeffs_r = Eigen::VectorXd::Zero(m);
    t.coeffs_i = Eigen::VectorXd::Zero(m);
    int count_r = 0, count_i = 0;
    for (auto& [which, er, ei, val] : coeffs) {
        int idx = monomial_index(t.order, er, ei);
        if (idx < 0)
            throw ParseError(path, 0, "exponent pair (" + std::to_string(er) + "," +
                                          std::to_string(ei) + ") exceeds order");
        if (which == 'r') { t.coeffs_r(idx) = val; ++count_r; }
        else { t.coeffs_i(idx) = val; ++count_i; }
    }
    if (count_r != m || count_i != m)
        throw ParseError(path, 0, "coefficient count mismatch: need " + std::to_string(m) +
                                      " per part, got r=" + std::to_string(count_r) +
                                      " i=" + std::to_string(count_i));
    check_template(t);
    return t;
}

void save_template(const GlassTemplate& t, const std::string& path) {
    check_template(t);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "glass-template 1\n";
    out << "kind " << (t.kind == GlassKind::VoltageDependent ? "voltage" : "current") << '\n';
    out << "order " << t.order << '\n';
    out << "center " << format_double(t.center.re) << ' ' << format_double(t.center.im) << '\n';
    if (t.range_r && t.range_i)
        out << "range " << format_double(t.range_r->first) << ' '
            << format_double(t.range_r->second) << ' '
            << format_double(t.range_i->first) << ' '
            << format_double(t.range_i->second) << '\n';
    const auto& exps = monomial_exponents(t.order);
    for (int k = 0; k < t.coeffs_r.size(); ++k)
        out << "coeff r " << exps[k].first << ' ' << exps[k].second << ' '
            << format_double(t.coeffs_r(k)) << '\n';
    for (int k = 0; k < t.coeffs_i.size(); ++k)
        out << "coeff i " << exps[k].first << ' ' << exps[k].second << ' '
            << format_double(t.coeffs_i(k)) << '\n';
}

}  // namespace splitgrid
