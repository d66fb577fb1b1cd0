#include "cdsim/fairness.hpp"

#include "cdsim/error.hpp"

#include <algorithm>
#include <numeric>

namespace cdsim::fairness {

Rational ClaimsProblem::total_demand() const {
    Rational sum(0);
    for (const auto& d : demands) sum += d;
    return sum;
}

void ClaimsProblem::check() const {
    if (supply.is_negative())
        throw Error(ErrorKind::InvalidArgument, "claims problem with negative supply");
    for (const auto& d : demands)
        if (d.is_negative())
            throw Error(ErrorKind::InvalidArgument, "claims problem with a negative demand");
    if (supply > total_demand())
        throw Error(ErrorKind::InvalidArgument,
                    "claims problem with supply exceeding total demand");
}

Rational Allocation::total() const {
    Rational sum(0);
    for (const auto& s : shares) sum += s;
    return sum;
}

PriorityOrder PriorityOrder::identity(std::size_t n) {
    PriorityOrder p;
    p.order.resize(n);
    std::iota(p.order.begin(), p.order.end(), std::size_t{0});
    return p;
}

bool PriorityOrder::is_permutation(std::size_t n) const {
    if (order.size() != n) return false;
    std::vector<bool> seen(n, false);
    for (std::size_t i : order) {
        if (i >= n || seen[i]) return false;
        seen[i] = true;
    }
    return true;
}

Allocation proportional_distribution(const ClaimsProblem& p) {
    p.check();
    Allocation a;
    a.shares.assign(p.demands.size(), Rational(0));
    if (p.supply.is_zero()) return a;
    Rational total = p.total_demand();
    if (total.is_zero())
        throw Error(ErrorKind::InvalidArgument,
                    "proportional distribution of positive supply over all-zero demands");
    for (std::size_t i = 0; i < p.demands.size(); ++i)
        a.shares[i] = p.supply * p.demands[i] / total;
    return a;
}

Allocation constrained_equal_distribution(const ClaimsProblem& p) {
    p.check();
    const std::size_t n = p.demands.size();
    Allocation a;
    a.shares.assign(n, Rational(0));
    if (n == 0) return a;

    std::vector<std::size_t> active(n);
    std::iota(active.begin(), active.end(), std::size_t{0});
    Rational remaining = p.supply;
    while (!active.empty()) {
        Rational equal = remaining / Rational(static_cast<long long>(active.size()));
        // Satisfy every claimant below the equal split in full, then recurse
        // on the rest; when none is below, split equally and stop.
        std::vector<std::size_t> still;
        bool assigned_any = false;
        for (std::size_t i : active) {
            if (p.demands[i] < equal) {
                a.shares[i] = p.demands[i];
                remaining -= p.demands[i];
                assigned_any = true;
            } else {
                still.push_back(i);
            }
        }
        if (!assigned_any) {
            for (std::size_t i : active) a.shares[i] = equal;
            return a;
        }
        active = std::move(still);
    }
    return a;
}

Allocation constrained_equal_distribution_threshold(const ClaimsProblem& p) {
    p.check();
    const std::size_t n = p.demands.size();
    Allocation a;
    a.shares.assign(n, Rational(0));
    if (n == 0 || p.supply.is_zero()) return a;

    // Walk the demands in ascending order: once every remaining claimant
    // can absorb an equal split of what is left, that split is the
    // threshold t with sum min(d_b, t) = supply.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t l, std::size_t r) { return p.demands[l] < p.demands[r]; });

    Rational remaining = p.supply;
    Rational threshold(0);
    std::size_t cut = n; // first position (in sorted order) paid the threshold
    for (std::size_t k = 0; k < n; ++k) {
        Rational equal = remaining / Rational(static_cast<long long>(n - k));
        if (p.demands[idx[k]] >= equal) {
            threshold = equal;
            cut = k;
            break;
        }
        remaining -= p.demands[idx[k]];
    }
    for (std::size_t k = 0; k < n; ++k)
        a.shares[idx[k]] = k < cut ? p.demands[idx[k]] : threshold;
    return a;
}

namespace {

ClaimsProblem half_claims(const ClaimsProblem& p) {
    ClaimsProblem h;
    h.supply = p.supply;
    h.demands.reserve(p.demands.size());
    for (const auto& d : p.demands) h.demands.push_back(d / Rational(2));
    return h;
}

} // namespace

Allocation contested_garment_distribution(const ClaimsProblem& p) {
    p.check();
    Rational total = p.total_demand();
    if (p.supply * Rational(2) <= total) return constrained_equal_distribution(half_claims(p));
    // Above the half-sum the rule is self-dual: distribute the loss by the
    // same rule and award each claimant its demand minus its loss share.
    ClaimsProblem loss;
    loss.supply = total - p.supply;
    loss.demands = p.demands;
    Allocation loss_share = constrained_equal_distribution(half_claims(loss));
    Allocation a;
    a.shares.reserve(p.demands.size());
    for (std::size_t i = 0; i < p.demands.size(); ++i)
        a.shares.push_back(p.demands[i] - loss_share.shares[i]);
    return a;
}

Allocation distribute(DivisibleRule rule, const ClaimsProblem& p) {
    switch (rule) {
        case DivisibleRule::Proportional: return proportional_distribution(p);
        case DivisibleRule::ConstrainedEqual: return constrained_equal_distribution(p);
        case DivisibleRule::ContestedGarment: return contested_garment_distribution(p);
    }
    throw Error(ErrorKind::InvalidArgument, "unknown fairness rule");
}

std::vector<BigInt> round_indivisible(const Allocation& fractional, const PriorityOrder& order) {
    const std::size_t n = fractional.shares.size();
    if (!order.is_permutation(n))
        throw Error(ErrorKind::InvalidArgument, "priority order is not a permutation");

    std::vector<BigInt> rounded(n);
    BigInt floor_total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (fractional.shares[i].is_negative())
            throw Error(ErrorKind::InvalidArgument, "negative share");
        rounded[i] = fractional.shares[i].floor();
        floor_total += rounded[i];
    }
    BigInt target = fractional.total().floor();
    BigInt surplus = target - floor_total;

    for (std::size_t i : order.order) {
        if (surplus == 0) break;
        if (!fractional.shares[i].is_integer()) {
            ++rounded[i];
            --surplus;
        }
    }
    if (surplus != 0)
        throw Error(ErrorKind::Runtime,
                    "infeasible rounding: surplus exceeds buyers with fractional shares");
    return rounded;
}

Allocation distribute_by_parts(DivisibleRule rule, const ClaimsProblem& p,
                               const std::vector<std::vector<std::size_t>>& parts) {
    p.check();
    const std::size_t n = p.demands.size();
    std::vector<bool> seen(n, false);
    for (const auto& part : parts)
        for (std::size_t i : part) {
            if (i >= n || seen[i])
                throw Error(ErrorKind::InvalidArgument, "parts do not partition the buyers");
            seen[i] = true;
        }
    for (bool s : seen)
        if (!s) throw Error(ErrorKind::InvalidArgument, "parts do not partition the buyers");

    Allocation a;
    a.shares.assign(n, Rational(0));
    Rational remaining = p.supply;
    for (const auto& part : parts) {
        ClaimsProblem sub;
        sub.demands.reserve(part.size());
        for (std::size_t i : part) sub.demands.push_back(p.demands[i]);
        Rational part_total = sub.total_demand();
        sub.supply = std::min(remaining, part_total);
        Allocation sub_alloc = distribute(rule, sub);
        for (std::size_t k = 0; k < part.size(); ++k) a.shares[part[k]] = sub_alloc.shares[k];
        remaining -= sub.supply;
    }
    return a;
}

} // namespace cdsim::fairness
