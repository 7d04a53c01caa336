#pragma once

#include <string>
#include <vector>

namespace retractlab {

// Radii ladder for a nested block-ball hull, together with the budget
// sequences that control the Lipschitz constant of the peeling retraction.
//
//   r     block-ball radii, r_1 = 1, strictly positive, nonincreasing
//   q     per-step shrink caps, r_n <= q_n r_{n-1} for n >= 2
//   A     block-sum constants A_m (default 2m)
//   delta per-stage Lipschitz budgets, prod (1+delta_n) <= 1 + target_delta
//   a     tail weights; alpha_n = sum_{k>n} a_k A_k <= delta_n / 2
//
// delta/a/alpha are present when the schedule was produced by one of the
// budgeted builders and empty for hand-made ladders.
struct RadiiSchedule {
    std::vector<double> r, q, A;
    std::vector<double> delta, a, alpha;
    double target_delta = 0.0;

    int depth() const { return static_cast<int>(r.size()); }
    bool has_budgets() const { return !delta.empty(); }

    // Throws std::invalid_argument when an invariant fails.
    void validate() const;

    std::string to_text() const;
    static RadiiSchedule from_text(const std::string& text);
};

// The standing example ladder: q_n = 1/(n 2^{n+1}), delta_n = 2^{-n+1},
// a_k = 1/(k 2^{k+1}), alpha_n = 2^{-n} (analytic tail), r_1 = 1 and
// r_n = r_{n-1} q_n afterwards.
RadiiSchedule default_schedule(int depth);

// Budgeted ladder for a prescribed total delta: delta_n = log(1+delta) 2^{-n}
// so that prod (1+delta_n) <= 1+delta, a_n = delta_n / (4 A_n), and
// q_n = min(a_n, delta_n / (2 A_{n-1})) with q_1 = a_1 (stage 1 is constant,
// so the A_0 cap is vacuous).
RadiiSchedule schedule_for_delta(double delta, int depth, std::vector<double> A = {});

// Plain geometric ladder r_n = ratio^{n-1}; no budget sequences.
RadiiSchedule geometric_schedule(double ratio, int depth);

// Ladder from explicit radii; no budget sequences.
RadiiSchedule schedule_from_radii(std::vector<double> r);

}  // namespace retractlab
