#include "smoothq/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "smoothq/errors.hpp"

namespace smoothq {

SmoothingSpec SmoothingSpec::hard_max() { return {SmoothingKind::hard_max, std::nullopt}; }

SmoothingSpec SmoothingSpec::softmax(Schedule beta) { return {SmoothingKind::softmax, beta}; }

SmoothingSpec SmoothingSpec::clipped_max(Schedule delta) {
  return {SmoothingKind::clipped_max, delta};
}

SmoothingSpec SmoothingSpec::parse(std::string_view text) {
  if (text == "max" || text == "hard-max") {
    return hard_max();
  }
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ParseError("unknown smoothing '" + std::string(text) +
                     "' (expected max, softmax:<schedule> or clipped:<schedule>)");
  }
  const auto head = text.substr(0, colon);
  const auto rest = text.substr(colon + 1);
  if (head == "softmax") {
    return softmax(Schedule::parse(rest));
  }
  if (head == "clipped" || head == "clipped-max") {
    return clipped_max(Schedule::parse(rest));
  }
  throw ParseError("unknown smoothing kind '" + std::string(head) + "'");
}

std::string SmoothingSpec::to_string() const {
  switch (kind_) {
    case SmoothingKind::hard_max:
      return "max";
    case SmoothingKind::softmax:
      return "softmax:" + schedule_->to_string();
    case SmoothingKind::clipped_max:
      return "clipped:" + schedule_->to_string();
  }
  return {};
}

double SmoothingSpec::parameter(std::uint64_t t) const {
  switch (kind_) {
    case SmoothingKind::hard_max:
      return 0.0;
    case SmoothingKind::softmax: {
      const double beta = schedule_->value(t);
      if (!(beta >= 0.0)) {
        throw ContractViolation("softmax inverse temperature must be >= 0");
      }
      return beta;
    }
    case SmoothingKind::clipped_max:
      return schedule_->rate(t);
  }
  return 0.0;
}

std::size_t argmax_lowest(std::span<const double> row) {
  if (row.empty()) {
    throw ContractViolation("argmax of an empty row");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i) {
    if (row[i] > row[best]) {
      best = i;
    }
  }
  return best;
}

void smooth_into(const SmoothingSpec& spec, std::span<const double> q_row, std::uint64_t t,
                 std::vector<double>& out) {
  if (q_row.empty()) {
    throw ContractViolation("smoothing an empty action row");
  }
  if (t == 0) {
    throw ContractViolation("smoothing step index starts at 1");
  }
  for (double q : q_row) {
    if (!std::isfinite(q)) {
      throw NumericError("non-finite Q-value in smoothing input");
    }
  }
  const std::size_t n = q_row.size();
  out.assign(n, 0.0);
  if (n == 1) {
    out[0] = 1.0;
    return;
  }

  switch (spec.kind()) {
    case SmoothingKind::hard_max:
      out[argmax_lowest(q_row)] = 1.0;
      return;

    case SmoothingKind::clipped_max: {
      const double delta = spec.parameter(t);
      const std::size_t best = argmax_lowest(q_row);
      const double rest = delta / static_cast<double>(n - 1);
      std::fill(out.begin(), out.end(), rest);
      out[best] = 1.0 - delta;
      return;
    }

    case SmoothingKind::softmax: {
      const double beta = spec.parameter(t);
      const double top = q_row[argmax_lowest(q_row)];
      double z = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        out[i] = std::exp(beta * (q_row[i] - top));
        z += out[i];
      }
      for (double& p : out) {
        p /= z;
      }
      return;
    }
  }
}

ActionDistribution smooth(const SmoothingSpec& spec, std::span<const double> q_row,
                          std::uint64_t t) {
  ActionDistribution d;
  smooth_into(spec, q_row, t, d.probs);
  return d;
}

double expected_value(std::span<const double> probs, std::span<const double> q_row) {
  if (probs.size() != q_row.size()) {
    throw ContractViolation("distribution and Q row lengths differ");
  }
  double v = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    v += probs[i] * q_row[i];
  }
  return v;
}

double expected_value(const ActionDistribution& dist, std::span<const double> q_row) {
  return expected_value(dist.probs, q_row);
}

double smoothed_value(const SmoothingSpec& spec, std::span<const double> q_row,
                      std::uint64_t t) {
  if (spec.kind() == SmoothingKind::hard_max) {
    if (q_row.empty()) {
      throw ContractViolation("smoothing an empty action row");
    }
    for (double q : q_row) {
      if (!std::isfinite(q)) {
        throw NumericError("non-finite Q-value in smoothing input");
      }
    }
    return q_row[argmax_lowest(q_row)];
  }
  thread_local std::vector<double> scratch;
  smooth_into(spec, q_row, t, scratch);
  return expected_value(scratch, q_row);
}

}  // namespace smoothq

namespace smoothq {

double bootstrap_slack(const SmoothingSpec& spec, std::span<const double> q_row, std::uint64_t t,
                       double discount) {
  if (q_row.size() < 2) {
    return 0.0;
  }
  thread_local std::vector<double> probs;
  smooth_into(spec, q_row, t, probs);
  const std::size_t best = argmax_lowest(q_row);
  const double off_mass = std::max(0.0, 1.0 - probs[best]);
  double lowest = 0.0;
  bool found = false;
  for (std::size_t i = 0; i < q_row.size(); ++i) {
    if (i != best && (!found || q_row[i] < lowest)) {
      lowest = q_row[i];
      found = true;
    }
  }
  return discount * off_mass * (std::abs(q_row[best]) + std::abs(lowest));
}

}  // namespace smoothq
