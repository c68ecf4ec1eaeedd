#pragma once

// rectangular data with missing cells, CSV I/O, and the model mini-language
// used by the estimators ("Y ~ C1+C2+X+X:C3", main effects and two-way or
// higher products joined by ':')

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mdag {

class Dataset {
  public:
    Dataset() = default;
    explicit Dataset(std::size_t nrow) : nrow_(nrow) {}

    std::size_t nrow() const { return nrow_; }
    std::size_t ncol() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }

    bool has(const std::string& name) const {
        return std::find(names_.begin(), names_.end(), name) != names_.end();
    }

    std::size_t col_index(const std::string& name) const {
        auto it = std::find(names_.begin(), names_.end(), name);
        if (it == names_.end()) throw std::invalid_argument("Dataset: no column " + name);
        return static_cast<std::size_t>(it - names_.begin());
    }

    void add_column(const std::string& name, std::vector<double> values) {
        if (has(name)) throw std::invalid_argument("Dataset: duplicate column " + name);
        if (ncol() == 0 && nrow_ == 0) nrow_ = values.size();
        if (values.size() != nrow_)
            throw std::invalid_argument("Dataset: column " + name + " has wrong length");
        names_.push_back(name);
        cols_.push_back(std::move(values));
        miss_.emplace_back(nrow_, std::uint8_t{0});
    }

    const std::vector<double>& col(const std::string& name) const {
        return cols_[col_index(name)];
    }
    std::vector<double>& col(const std::string& name) { return cols_[col_index(name)]; }

    double at(std::size_t row, std::size_t c) const { return cols_[c][row]; }

    bool is_missing(std::size_t row, std::size_t c) const { return miss_[c][row] != 0; }
    bool is_missing(std::size_t row, const std::string& name) const {
        return is_missing(row, col_index(name));
    }

    void set_missing(std::size_t row, const std::string& name) {
        std::size_t c = col_index(name);
        miss_[c][row] = 1;
        cols_[c][row] = std::numeric_limits<double>::quiet_NaN();
    }

    void set_value(std::size_t row, const std::string& name, double v) {
        std::size_t c = col_index(name);
        miss_[c][row] = 0;
        cols_[c][row] = v;
    }

    std::size_t n_missing(const std::string& name) const {
        const auto& m = miss_[col_index(name)];
        return static_cast<std::size_t>(std::count(m.begin(), m.end(), std::uint8_t{1}));
    }

    // rows with every listed column observed
    std::vector<std::size_t> complete_rows(const std::vector<std::string>& cols) const {
        std::vector<std::size_t> idx;
        std::vector<std::size_t> cs;
        cs.reserve(cols.size());
        for (const auto& c : cols) cs.push_back(col_index(c));
        for (std::size_t r = 0; r < nrow_; ++r) {
            bool ok = true;
            for (std::size_t c : cs)
                if (miss_[c][r]) {
                    ok = false;
                    break;
                }
            if (ok) idx.push_back(r);
        }
        return idx;
    }

    // row subset in the given order (bootstrap resamples repeat rows)
    Dataset subset(const std::vector<std::size_t>& rows) const {
        Dataset out(rows.size());
        for (std::size_t c = 0; c < ncol(); ++c) {
            std::vector<double> v(rows.size());
            for (std::size_t i = 0; i < rows.size(); ++i) v[i] = cols_[c][rows[i]];
            out.add_column(names_[c], std::move(v));
            for (std::size_t i = 0; i < rows.size(); ++i)
                if (miss_[c][rows[i]]) out.miss_[c][i] = 1;
        }
        return out;
    }

  private:
    std::size_t nrow_ = 0;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> cols_;
    std::vector<std::vector<std::uint8_t>> miss_;
};

// ---------------------------------------------------------------------------
// CSV, with the token NA for missing cells; indicator columns use the ".M"
// suffix convention and are ordinary 0/1 columns (no derivation on write)

inline void write_csv(const Dataset& d, std::ostream& out) {
    for (std::size_t c = 0; c < d.ncol(); ++c) out << (c ? "," : "") << d.names()[c];
    out << "\n";
    std::ostringstream cell;
    cell.precision(17);
    for (std::size_t r = 0; r < d.nrow(); ++r) {
        for (std::size_t c = 0; c < d.ncol(); ++c) {
            if (c) out << ",";
            if (d.is_missing(r, c)) {
                out << "NA";
            } else {
                cell.str("");
                cell << d.at(r, c);
                out << cell.str();
            }
        }
        out << "\n";
    }
}

inline void write_csv(const Dataset& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_csv(d, out);
}

inline Dataset read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> names;
    {
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) names.push_back(tok);
    }
    std::vector<std::vector<double>> cols(names.size());
    std::vector<std::vector<std::uint8_t>> miss(names.size());
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::size_t c = 0;
        while (std::getline(ss, tok, ',')) {
            if (c >= names.size())
                throw std::runtime_error("csv line " + std::to_string(lineno) + ": too many fields");
            if (tok == "NA") {
                cols[c].push_back(std::numeric_limits<double>::quiet_NaN());
                miss[c].push_back(1);
            } else {
                try {
                    std::size_t used = 0;
                    double v = std::stod(tok, &used);
                    if (used != tok.size()) throw std::invalid_argument(tok);
                    cols[c].push_back(v);
                } catch (const std::exception&) {
                    throw std::runtime_error("csv line " + std::to_string(lineno) +
                                             ": bad number '" + tok + "'");
                }
                miss[c].push_back(0);
            }
            ++c;
        }
        if (c != names.size())
            throw std::runtime_error("csv line " + std::to_string(lineno) + ": too few fields");
    }
    Dataset d(cols.empty() ? 0 : cols[0].size());
    for (std::size_t c = 0; c < names.size(); ++c) {
        d.add_column(names[c], cols[c]);
        for (std::size_t r = 0; r < miss[c].size(); ++r)
            if (miss[c][r]) d.set_missing(r, names[c]);
    }
    // when both V and V.M are present the indicator must agree with the
    // NA pattern; catches files edited by hand
    for (const auto& name : names) {
        std::string ind = name + ".M";
        if (!d.has(ind)) continue;
        for (std::size_t r = 0; r < d.nrow(); ++r) {
            bool na = d.is_missing(r, name);
            double mv = d.at(r, d.col_index(ind));
            if ((na && mv != 1.0) || (!na && mv != 0.0))
                throw std::runtime_error("csv: indicator " + ind + " disagrees with NA pattern at row " +
                                         std::to_string(r + 1));
        }
    }
    return d;
}

inline Dataset read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    return read_csv(in);
}

// ---------------------------------------------------------------------------
// model mini-language

enum class Family { LinearGaussian, BinomialLogit };

struct Term {
    std::vector<std::string> factors;  // product of these columns

    std::string label() const {
        std::string s;
        for (std::size_t i = 0; i < factors.size(); ++i) s += (i ? ":" : "") + factors[i];
        return s;
    }

    // order-insensitive identity for duplicate detection
    std::string key() const {
        std::vector<std::string> f = factors;
        std::sort(f.begin(), f.end());
        std::string s;
        for (const auto& x : f) s += x + ":";
        return s;
    }

    bool involves(const std::string& name) const {
        return std::find(factors.begin(), factors.end(), name) != factors.end();
    }

    bool operator==(const Term& o) const { return key() == o.key(); }
};

struct ModelSpec {
    std::string response;
    std::vector<Term> terms;
    Family family = Family::LinearGaussian;

    bool has_term(const Term& t) const {
        for (const auto& u : terms)
            if (u == t) return true;
        return false;
    }

    // no-op when the term is already present, so plan builders can layer
    // variant rules without bookkeeping
    void add_term(const Term& t) {
        if (!has_term(t)) terms.push_back(t);
    }

    std::string formula() const {
        if (terms.empty()) return response + " ~ 1";
        std::string s = response + " ~ ";
        for (std::size_t i = 0; i < terms.size(); ++i) s += (i ? " + " : "") + terms[i].label();
        return s;
    }

    std::vector<std::string> columns() const {
        std::vector<std::string> v{response};
        for (const auto& t : terms)
            for (const auto& f : t.factors)
                if (std::find(v.begin(), v.end(), f) == v.end()) v.push_back(f);
        return v;
    }
};

namespace detail {
inline std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}
}  // namespace detail

inline ModelSpec parse_model_spec(const std::string& text, Family family) {
    std::size_t tilde = text.find('~');
    if (tilde == std::string::npos)
        throw std::invalid_argument("model spec: expected 'response ~ terms' in '" + text + "'");
    ModelSpec spec;
    spec.family = family;
    spec.response = detail::strip(text.substr(0, tilde));
    if (spec.response.empty()) throw std::invalid_argument("model spec: empty response");
    std::string rhs = text.substr(tilde + 1);
    std::stringstream ss(rhs);
    std::string piece;
    std::set<std::string> seen;
    bool intercept_token = false;
    while (std::getline(ss, piece, '+')) {
        piece = detail::strip(piece);
        if (piece.empty()) throw std::invalid_argument("model spec: empty term in '" + text + "'");
        if (piece == "1") {  // explicit intercept-only marker; intercept is always present
            intercept_token = true;
            continue;
        }
        Term t;
        std::stringstream ts(piece);
        std::string f;
        while (std::getline(ts, f, ':')) {
            f = detail::strip(f);
            if (f.empty())
                throw std::invalid_argument("model spec: empty factor in term '" + piece + "'");
            if (f == "1")
                throw std::invalid_argument("model spec: '1' cannot appear inside a product");
            t.factors.push_back(f);
        }
        if (!seen.insert(t.key()).second)
            throw std::invalid_argument("model spec: duplicate term '" + piece + "'");
        spec.terms.push_back(std::move(t));
    }
    if (spec.terms.empty() && !intercept_token)
        throw std::invalid_argument("model spec: no terms in '" + text + "'");
    return spec;
}

// design matrix with a leading intercept column; every referenced cell must
// be observed (callers resolve missingness before fitting)
inline void build_design(const Dataset& d, const ModelSpec& spec,
                         const std::vector<std::size_t>& rows, Eigen::MatrixXd& X,
                         Eigen::VectorXd& y) {
    std::vector<std::size_t> term_cols;  // flattened factor column indices
    std::vector<std::size_t> term_len;
    for (const auto& t : spec.terms) {
        term_len.push_back(t.factors.size());
        for (const auto& f : t.factors) term_cols.push_back(d.col_index(f));
    }
    std::size_t yc = d.col_index(spec.response);
    X.resize(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(spec.terms.size() + 1));
    y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::size_t r = rows[i];
        if (d.is_missing(r, yc))
            throw std::invalid_argument("design: missing response at row " + std::to_string(r));
        y(static_cast<Eigen::Index>(i)) = d.at(r, yc);
        X(static_cast<Eigen::Index>(i), 0) = 1.0;
        std::size_t k = 0;
        for (std::size_t j = 0; j < term_len.size(); ++j) {
            double prod = 1.0;
            for (std::size_t u = 0; u < term_len[j]; ++u) {
                std::size_t c = term_cols[k + u];
                if (d.is_missing(r, c))
                    throw std::invalid_argument("design: missing cell in column " + d.names()[c] +
                                                " at row " + std::to_string(r));
                prod *= d.at(r, c);
            }
            k += term_len[j];
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = prod;
        }
    }
}

inline std::vector<std::size_t> all_rows(const Dataset& d) {
    std::vector<std::size_t> rows(d.nrow());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return rows;
}

}  // namespace mdag
