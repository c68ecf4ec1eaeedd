#pragma once

// Flat probability tables over small discrete variable sets. The joint law
// of a structural model over ~10 binary variables fits in a few thousand
// cells, so identification formulas and their oracle counterparts are both
// evaluated by exact summation over these tables; no sampling error enters
// any of the equality checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mdag {

// partial assignment: (variable index, value) pairs
using Event = std::vector<std::pair<int, int>>;

class JointTable {
public:
    JointTable() = default;

    JointTable(std::vector<std::string> names, std::vector<int> cards)
        : names_(std::move(names)), cards_(std::move(cards)) {
        if (names_.size() != cards_.size())
            throw std::invalid_argument("JointTable: names/cards size mismatch");
        strides_.resize(cards_.size());
        std::size_t s = 1;
        for (std::size_t i = 0; i < cards_.size(); ++i) {
            if (cards_[i] < 2) throw std::invalid_argument("JointTable: cardinality must be >= 2");
            strides_[i] = s;
            s *= static_cast<std::size_t>(cards_[i]);
        }
        cells_.assign(s, 0.0);
    }

    std::size_t size() const { return cells_.size(); }
    std::size_t n_vars() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    int card(int v) const { return cards_[static_cast<std::size_t>(v)]; }

    int var_index(const std::string& name) const {
        auto it = std::find(names_.begin(), names_.end(), name);
        if (it == names_.end())
            throw std::invalid_argument("JointTable: unknown variable " + name);
        return static_cast<int>(it - names_.begin());
    }

    std::size_t cell_index(const std::vector<int>& full) const {
        std::size_t idx = 0;
        for (std::size_t i = 0; i < strides_.size(); ++i)
            idx += strides_[i] * static_cast<std::size_t>(full[i]);
        return idx;
    }

    double& at(const std::vector<int>& full) { return cells_[cell_index(full)]; }
    double at(const std::vector<int>& full) const { return cells_[cell_index(full)]; }
    double& raw(std::size_t i) { return cells_[i]; }
    double raw(std::size_t i) const { return cells_[i]; }

    // decode flat cell index into a full assignment
    std::vector<int> decode(std::size_t idx) const {
        std::vector<int> full(n_vars());
        for (std::size_t i = 0; i < n_vars(); ++i) {
            full[i] = static_cast<int>((idx / strides_[i]) %
                                       static_cast<std::size_t>(cards_[i]));
        }
        return full;
    }

    // probability mass of a partial assignment (sum over free variables)
    double mass(const Event& ev) const {
        double total = 0.0;
        for (std::size_t idx = 0; idx < cells_.size(); ++idx) {
            if (consistent(idx, ev)) total += cells_[idx];
        }
        return total;
    }

    // P(target | given); throws if the conditioning event has ~zero mass
    double conditional(const Event& target, const Event& given) const {
        double den = mass(given);
        if (den <= 0.0)
            throw std::domain_error("JointTable: conditioning on a zero-probability event");
        Event both = given;
        both.insert(both.end(), target.begin(), target.end());
        return mass(both) / den;
    }

    void validate(double tol = 1e-12) const {
        double total = 0.0;
        for (double c : cells_) {
            if (c < 0.0) throw std::domain_error("JointTable: negative cell");
            total += c;
        }
        if (std::abs(total - 1.0) > tol)
            throw std::domain_error("JointTable: cells sum to " + std::to_string(total));
    }

    bool consistent(std::size_t idx, const Event& ev) const {
        for (const auto& [v, val] : ev) {
            std::size_t i = static_cast<std::size_t>(v);
            int got = static_cast<int>((idx / strides_[i]) %
                                       static_cast<std::size_t>(cards_[i]));
            if (got != val) return false;
        }
        return true;
    }

private:
    std::vector<std::string> names_;
    std::vector<int> cards_;
    std::vector<std::size_t> strides_;
    std::vector<double> cells_;
};

// iterate all full assignments of the given cardinalities
template <typename F>
void for_each_assignment(const std::vector<int>& cards, F&& fn) {
    std::vector<int> a(cards.size(), 0);
    while (true) {
        fn(const_cast<const std::vector<int>&>(a));
        std::size_t i = 0;
        for (; i < cards.size(); ++i) {
            if (++a[i] < cards[i]) break;
            a[i] = 0;
        }
        if (i == cards.size()) break;
    }
}

}  // namespace mdag
