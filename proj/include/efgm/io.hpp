#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "estimate.hpp"
#include "experiments.hpp"
#include "gent.hpp"
#include "params.hpp"
#include "sampling.hpp"
#include "select.hpp"
#include "subset.hpp"

namespace efgm {

/// Shortest decimal that round-trips a double (17 significant digits).
inline std::string fmt17(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Human-table formatting at a few significant digits.
inline std::string fmt_sig(double v, int digits = 4)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return buf;
}

inline std::string digest_hex(std::uint64_t digest)
{
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
    return buf;
}

/// Compact element list, e.g. {1,2} -> "12" (d <= 9) or "1_12" above.
inline std::string mask_label(mask_t m, int d)
{
    const auto elems = subset_elements(m);
    std::string out;
    for (std::size_t i = 0; i < elems.size(); ++i) {
        if (d > 9 && i > 0) out += '_';
        out += std::to_string(elems[i]);
    }
    return out;
}

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& cell, const std::string& where)
{
    const std::string t = trim(cell);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size())
        throw std::runtime_error(where + ": non-numeric cell '" + cell + "'");
    return v;
}

inline std::uint64_t parse_u64(const std::string& cell, const std::string& where)
{
    const std::string t = trim(cell);
    char* end = nullptr;
    const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size())
        throw std::runtime_error(where + ": non-integer cell '" + cell + "'");
    return v;
}

inline std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

inline std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

inline std::ifstream open_in(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return in;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Parameter vectors: flat CSV `k,mask,lambda` with a decimal bitmask.

inline void write_params_csv(const std::string& path, const ParamVector& p)
{
    auto out = detail::open_out(path);
    out << "k,mask,lambda\n";
    for (const auto& [k, mask] : p.keys())
        out << k << ',' << mask << ',' << fmt17(p.get(k, mask)) << "\n";
}

/// Reads a full parameter table. If d == 0 the dimension is inferred from the
/// row count 2(2^d - d - 1); every canonical key must appear exactly once.
inline ParamVector read_params_csv(const std::string& path, int d = 0)
{
    auto in = detail::open_in(path);
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != "k,mask,lambda")
        throw std::runtime_error(path + ": expected header 'k,mask,lambda'");
    std::vector<std::tuple<int, mask_t, double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto cells = detail::split_csv(t);
        const std::string where = path + ":" + std::to_string(lineno);
        if (cells.size() != 3) throw std::runtime_error(where + ": expected 3 cells");
        const auto k = static_cast<int>(detail::parse_u64(cells[0], where));
        const auto mask = static_cast<mask_t>(detail::parse_u64(cells[1], where));
        rows.emplace_back(k, mask, detail::parse_double(cells[2], where));
    }
    if (d == 0) {
        for (int cand = 2; cand <= kMaxDim; ++cand)
            if (rows.size() == 2 * ((std::size_t{1} << cand) - cand - 1)) {
                d = cand;
                break;
            }
        if (d == 0) throw std::runtime_error(path + ": row count matches no dimension");
    }
    ParamVector p(d);
    std::vector<char> seen(p.count(), 0);
    for (const auto& [k, mask, v] : rows) {
        const std::size_t slot = p.slot(k, mask);  // throws on bad key
        if (seen[slot]) throw std::runtime_error(path + ": duplicate key in parameter table");
        seen[slot] = 1;
        p.set(k, mask, v);
    }
    for (char s : seen)
        if (!s) throw std::runtime_error(path + ": incomplete parameter table");
    return p;
}

// ---------------------------------------------------------------------------
// Samples: `u1,...,ud` CSV with a `#` metadata line.

inline void write_sample_csv(const std::string& path, const SampleBatch& b)
{
    auto out = detail::open_out(path);
    out << "# seed=" << b.seed << " n=" << b.n << " d=" << b.d << " model="
        << digest_hex(b.model_digest) << "\n";
    for (int j = 1; j <= b.d; ++j) out << (j > 1 ? "," : "") << 'u' << j;
    out << "\n";
    for (std::size_t i = 0; i < b.n; ++i) {
        for (int j = 0; j < b.d; ++j) out << (j > 0 ? "," : "") << fmt17(b.at(i, j));
        out << "\n";
    }
}

struct LoadedMatrix {
    std::vector<double> values;  // row-major
    std::size_t n = 0;
    int d = 0;
    std::vector<std::string> header;
};

/// Generic numeric CSV reader: header row required, `#` lines skipped,
/// non-numeric cells are a hard error.
inline LoadedMatrix read_matrix_csv(const std::string& path)
{
    auto in = detail::open_in(path);
    LoadedMatrix out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        out.header = detail::split_csv(t);
        break;
    }
    if (out.header.empty()) throw std::runtime_error(path + ": missing header row");
    out.d = static_cast<int>(out.header.size());
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto cells = detail::split_csv(t);
        const std::string where = path + ":" + std::to_string(lineno);
        if (cells.size() != out.header.size())
            throw std::runtime_error(where + ": expected " + std::to_string(out.header.size()) +
                                     " cells");
        for (const auto& c : cells) out.values.push_back(detail::parse_double(c, where));
        ++out.n;
    }
    if (out.n == 0) throw std::runtime_error(path + ": no data rows");
    return out;
}

// ---------------------------------------------------------------------------
// Estimation artifacts.

inline void write_estimates_csv(const std::string& path, const EstimationResult& res)
{
    auto out = detail::open_out(path);
    out << "k,mask,lambda,se,pvalue\n";
    const auto keys = res.params_hat.keys();
    for (std::size_t i = 0; i < keys.size(); ++i)
        out << keys[i].k << ',' << keys[i].mask << ',' << fmt17(res.params_hat.flat()[i]) << ','
            << fmt17(res.se[i]) << ',' << fmt17(res.pvalue[i]) << "\n";
}

inline void write_covariance_csv(const std::string& path, const CovMatrix& cov, int d)
{
    auto out = detail::open_out(path);
    for (std::size_t j = 0; j < cov.order.size(); ++j)
        out << (j > 0 ? "," : "") << 'l' << cov.order[j].k << '_'
            << mask_label(cov.order[j].mask, d);
    out << "\n";
    for (Eigen::Index i = 0; i < cov.mat.rows(); ++i) {
        for (Eigen::Index j = 0; j < cov.mat.cols(); ++j)
            out << (j > 0 ? "," : "") << fmt17(cov.mat(i, j));
        out << "\n";
    }
}

inline void write_gof_csv(const std::string& path, const GofReport& rep)
{
    auto out = detail::open_out(path);
    out << "coordinate,statistic,pvalue\n";
    for (const auto& c : rep.coords)
        out << c.coordinate << ',' << fmt17(c.statistic) << ',' << fmt17(c.pvalue) << "\n";
}

inline void write_deviation_csv(const std::string& path,
                                const std::vector<std::vector<DeviationPoint>>& per_coord)
{
    auto out = detail::open_out(path);
    out << "coordinate,u,deviation\n";
    for (std::size_t j = 0; j < per_coord.size(); ++j)
        for (const auto& pt : per_coord[j])
            out << (j + 1) << ',' << fmt17(pt.u) << ',' << fmt17(pt.dev) << "\n";
}

inline void write_scores_csv(const std::string& path,
                             const std::vector<std::pair<std::string, ModelScore>>& scores)
{
    auto out = detail::open_out(path);
    out << "model,loglik,p_active,aic,bic,n\n";
    for (const auto& [name, s] : scores)
        out << name << ',' << fmt17(s.loglik) << ',' << s.p_active << ',' << fmt17(s.aic) << ','
            << fmt17(s.bic) << ',' << s.n << "\n";
}

// ---------------------------------------------------------------------------
// Study tables (CSV and aligned-text renderings).

inline void write_table_md(std::ostream& out, const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& rows)
{
    std::vector<std::size_t> w(header.size());
    for (std::size_t j = 0; j < header.size(); ++j) w[j] = header[j].size();
    for (const auto& r : rows)
        for (std::size_t j = 0; j < r.size(); ++j) w[j] = std::max(w[j], r[j].size());
    const auto emit = [&](const std::vector<std::string>& r) {
        out << '|';
        for (std::size_t j = 0; j < r.size(); ++j) {
            out << ' ' << r[j];
            for (std::size_t k = r[j].size(); k < w[j]; ++k) out << ' ';
            out << " |";
        }
        out << "\n";
    };
    emit(header);
    out << '|';
    for (std::size_t j = 0; j < header.size(); ++j) {
        for (std::size_t k = 0; k < w[j] + 2; ++k) out << '-';
        out << '|';
    }
    out << "\n";
    for (const auto& r : rows) emit(r);
}

inline void write_consistency_table(const std::string& path, const ConsistencyResult& res,
                                    bool md, int human_digits = 4)
{
    const int d = res.truth.dim();
    std::vector<std::string> header{"k", "M", "truth"};
    for (std::size_t s = 0; s < res.sizes.size(); ++s)
        header.push_back("n=" + std::to_string(res.sizes[s]));
    std::vector<std::vector<std::string>> rows;
    const auto truth = res.truth.flat();
    for (std::size_t i = 0; i < res.order.size(); ++i) {
        std::vector<std::string> row{std::to_string(res.order[i].k),
                                     mask_label(res.order[i].mask, d),
                                     md ? fmt_sig(truth[i], human_digits) : fmt17(truth[i])};
        for (const auto& col : res.estimates)
            row.push_back(md ? fmt_sig(col[i], human_digits) : fmt17(col[i]));
        rows.push_back(std::move(row));
    }
    auto out = detail::open_out(path);
    if (md) {
        write_table_md(out, header, rows);
    } else {
        for (std::size_t j = 0; j < header.size(); ++j) out << (j > 0 ? "," : "") << header[j];
        out << "\n";
        for (const auto& r : rows) {
            for (std::size_t j = 0; j < r.size(); ++j) out << (j > 0 ? "," : "") << r[j];
            out << "\n";
        }
    }
}

inline void write_coverage_table(const std::string& path, const CoverageResult& res, bool md)
{
    const int d = res.truth.dim();
    std::vector<std::string> header{"k", "M", "coverage_pct"};
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < res.order.size(); ++i)
        rows.push_back({std::to_string(res.order[i].k), mask_label(res.order[i].mask, d),
                        md ? fmt_sig(res.coverage_pct[i], 4) : fmt17(res.coverage_pct[i])});
    auto out = detail::open_out(path);
    if (md) {
        write_table_md(out, header, rows);
    } else {
        out << "k,M,coverage_pct\n";
        for (const auto& r : rows) out << r[0] << ',' << r[1] << ',' << r[2] << "\n";
    }
}

inline void write_chi2_table(const std::string& path, const Chi2CalibrationResult& res, bool md)
{
    auto out = detail::open_out(path);
    const std::vector<std::string> header{"n", "reps", "alpha", "df", "rejections", "rate"};
    const std::vector<std::vector<std::string>> rows{
        {std::to_string(res.n), std::to_string(res.reps), fmt17(res.alpha), std::to_string(res.df),
         std::to_string(res.rejections), fmt17(res.rejection_rate)}};
    if (md) {
        write_table_md(out, header, rows);
    } else {
        out << "n,reps,alpha,df,rejections,rate\n";
        for (const auto& r : rows) {
            for (std::size_t j = 0; j < r.size(); ++j) out << (j > 0 ? "," : "") << r[j];
            out << "\n";
        }
    }
}

// ---------------------------------------------------------------------------
// Structured text config: `key = value`, dotted sections, `#` comments.

class Config {
public:
    void set(const std::string& key, const std::string& value) { kv_[key] = value; }
    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    const std::string& get(const std::string& key) const
    {
        const auto it = kv_.find(key);
        if (it == kv_.end()) throw std::runtime_error("config: missing key '" + key + "'");
        return it->second;
    }

    std::string get_or(const std::string& key, const std::string& fallback) const
    {
        const auto it = kv_.find(key);
        return it == kv_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key) const
    {
        return detail::parse_double(get(key), "config key '" + key + "'");
    }

    std::uint64_t get_u64(const std::string& key) const
    {
        return detail::parse_u64(get(key), "config key '" + key + "'");
    }

    std::vector<std::uint64_t> get_u64_list(const std::string& key) const
    {
        std::vector<std::uint64_t> out;
        for (const auto& cell : detail::split_csv(get(key)))
            out.push_back(detail::parse_u64(cell, "config key '" + key + "'"));
        return out;
    }

    const std::map<std::string, std::string>& items() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

inline Config read_config(const std::string& path)
{
    auto in = detail::open_in(path);
    Config cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // strip trailing comments before parsing the assignment
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected 'key = value'");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string value = detail::trim(t.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": empty key");
        cfg.set(key, value);
    }
    return cfg;
}

namespace detail {

/// Parses the element list of a `lambdaK.<elems>` key: digit string (d <= 9)
/// or underscore-separated coordinates for higher dimensions.
inline mask_t mask_from_key(const std::string& elems, int d, const std::string& where)
{
    std::vector<int> coords;
    if (elems.find('_') != std::string::npos) {
        std::istringstream ss(elems);
        std::string part;
        while (std::getline(ss, part, '_'))
            coords.push_back(static_cast<int>(parse_u64(part, where)));
    } else {
        for (char c : elems) {
            if (c < '1' || c > '9') throw std::runtime_error(where + ": bad coordinate '" + c + '\'');
            coords.push_back(c - '0');
        }
    }
    mask_t m = 0;
    for (int c : coords) {
        if (c < 1 || c > d) throw std::runtime_error(where + ": coordinate out of range");
        m |= mask_t{1} << (c - 1);
    }
    return m;
}

}  // namespace detail

/// Builds a ParamVector from `lambda1.12 = ...` style keys; absent keys are 0.
inline ParamVector params_from_config(const Config& cfg, int d)
{
    ParamVector p(d);
    for (const auto& [key, value] : cfg.items()) {
        if (key.rfind("lambda", 0) != 0) continue;
        const std::string where = "config key '" + key + "'";
        if (key.size() < 8 || (key[6] != '1' && key[6] != '2') || key[7] != '.')
            throw std::runtime_error(where + ": expected lambda1.<set> or lambda2.<set>");
        const int k = key[6] - '0';
        const mask_t m = detail::mask_from_key(key.substr(8), d, where);
        if (subset_size(m) < 2) throw std::runtime_error(where + ": set needs >= 2 coordinates");
        p.set(k, m, detail::parse_double(value, where));
    }
    return p;
}

inline void write_params_config(const std::string& path, const ParamVector& p)
{
    auto out = detail::open_out(path);
    out << "dimension = " << p.dim() << "\n";
    for (const auto& [k, mask] : p.keys())
        out << "lambda" << k << '.' << mask_label(mask, p.dim()) << " = " << fmt17(p.get(k, mask))
            << "\n";
}

/// Marginal parameter defaults for the four bearing channels.
inline std::vector<GenTParams> default_bearing_marginals()
{
    return {{-0.119, 0.0877, 16.0},
            {-0.116, 0.0905, 26.8},
            {-0.115, 0.103, 8.28},
            {-0.116, 0.0743, 4.73}};
}

/// Per-column marginals from `channel.N.a/b/c`; columns without keys fall back
/// to the bearing defaults when d == 4, otherwise all three keys are required.
inline std::vector<GenTParams> gent_from_config(const Config& cfg, int d)
{
    std::vector<GenTParams> out;
    const auto defaults = default_bearing_marginals();
    for (int j = 1; j <= d; ++j) {
        const std::string base = "channel." + std::to_string(j) + ".";
        if (cfg.has(base + "a") || cfg.has(base + "b") || cfg.has(base + "c")) {
            out.push_back({cfg.get_double(base + "a"), cfg.get_double(base + "b"),
                           cfg.get_double(base + "c")});
        } else if (d == 4) {
            out.push_back(defaults[j - 1]);
        } else {
            throw std::runtime_error("config: missing marginal block '" + base + "{a,b,c}'");
        }
    }
    return out;
}

}  // namespace efgm
