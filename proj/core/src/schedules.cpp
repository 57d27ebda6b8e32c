#include "smoothq/schedules.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>
#include <vector>

#include "smoothq/errors.hpp"

namespace smoothq {

namespace {

std::vector<std::string_view> split_colon(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(':', start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) {
      break;
    }
    start = pos + 1;
  }
  return parts;
}

double parse_number(std::string_view field, std::string_view whole) {
  double v = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || !std::isfinite(v)) {
    throw ParseError("bad number '" + std::string(field) + "' in schedule '" +
                     std::string(whole) + "'");
  }
  return v;
}

// Shortest representation that parses back to the same double.
std::string fmt_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

Schedule::Schedule(ScheduleKind kind, double base, double param)
    : kind_(kind), base_(base), param_(param) {
  if (!std::isfinite(base_) || !std::isfinite(param_)) {
    throw ContractViolation("schedule parameters must be finite");
  }
}

Schedule Schedule::constant(double value) { return {ScheduleKind::constant, value, 0.0}; }

Schedule Schedule::hyperbolic(double base, double rate) {
  if (base <= 0.0 || rate < 0.0) {
    throw ContractViolation("hyperbolic schedule needs base > 0 and rate >= 0");
  }
  return {ScheduleKind::hyperbolic, base, rate};
}

Schedule Schedule::linear(double base, double slope) { return {ScheduleKind::linear, base, slope}; }

Schedule Schedule::exponential_decay(double rate) {
  if (rate <= 0.0) {
    throw ContractViolation("exponential-decay schedule needs rate > 0");
  }
  return {ScheduleKind::exponential_decay, 1.0, rate};
}

Schedule Schedule::parse(std::string_view text) {
  const auto parts = split_colon(text);
  const auto& name = parts.front();
  auto expect = [&](std::size_t n) {
    if (parts.size() != n + 1) {
      throw ParseError("schedule '" + std::string(text) + "' expects " + std::to_string(n) +
                       " parameter(s)");
    }
  };
  try {
    if (name == "const" || name == "constant") {
      expect(1);
      return constant(parse_number(parts[1], text));
    }
    if (name == "hyperbolic") {
      expect(2);
      return hyperbolic(parse_number(parts[1], text), parse_number(parts[2], text));
    }
    if (name == "linear") {
      expect(2);
      return linear(parse_number(parts[1], text), parse_number(parts[2], text));
    }
    if (name == "exp" || name == "exponential-decay") {
      expect(1);
      return exponential_decay(parse_number(parts[1], text));
    }
  } catch (const ContractViolation& e) {
    throw ParseError("schedule '" + std::string(text) + "': " + e.what());
  }
  throw ParseError("unknown schedule kind '" + std::string(name) + "'");
}

double Schedule::value(std::uint64_t t) const {
  if (t == 0) {
    throw ContractViolation("schedule step index starts at 1");
  }
  const double td = static_cast<double>(t);
  switch (kind_) {
    case ScheduleKind::constant:
      return base_;
    case ScheduleKind::hyperbolic:
      return base_ / (1.0 + param_ * td);
    case ScheduleKind::linear:
      return base_ + param_ * (td - 1.0);
    case ScheduleKind::exponential_decay:
      return std::exp(-param_ * td);
  }
  return base_;
}

double Schedule::rate(std::uint64_t t) const { return std::clamp(value(t), 0.0, 1.0); }

std::string Schedule::to_string() const {
  switch (kind_) {
    case ScheduleKind::constant:
      return "const:" + fmt_number(base_);
    case ScheduleKind::hyperbolic:
      return "hyperbolic:" + fmt_number(base_) + ":" + fmt_number(param_);
    case ScheduleKind::linear:
      return "linear:" + fmt_number(base_) + ":" + fmt_number(param_);
    case ScheduleKind::exponential_decay:
      return "exp:" + fmt_number(param_);
  }
  return {};
}

RobbinsMonroReport check_robbins_monro(const Schedule& schedule, std::uint64_t horizon) {
  if (horizon < kMinRobbinsMonroHorizon) {
    throw ContractViolation("Robbins-Monro check needs horizon >= 10^4");
  }
  RobbinsMonroReport rep;
  rep.horizon = horizon;
  const std::uint64_t half = horizon / 2;
  // Kahan summation keeps the tails meaningful against large partial sums.
  struct Kahan {
    double sum = 0.0, c = 0.0;
    void add(double x) {
      const double y = x - c;
      const double t = sum + y;
      c = (t - sum) - y;
      sum = t;
    }
  } head, tail, head_sq, tail_sq;

  for (std::uint64_t t = 1; t <= horizon; ++t) {
    const double a = schedule.rate(t);
    if (t <= half) {
      head.add(a);
      head_sq.add(a * a);
    } else {
      tail.add(a);
      tail_sq.add(a * a);
    }
  }
  rep.partial_sum = head.sum + tail.sum;
  rep.partial_sum_squares = head_sq.sum + tail_sq.sum;
  rep.tail_sum = tail.sum;
  rep.head_sq_sum = head_sq.sum;
  rep.tail_sq_sum = tail_sq.sum;
  rep.sum_diverges = rep.tail_sum > kRobbinsMonroTailFraction * rep.partial_sum;
  rep.squares_converge = rep.tail_sq_sum < rep.head_sq_sum &&
                         rep.tail_sq_sum <= kRobbinsMonroTailFraction * rep.partial_sum_squares;
  return rep;
}

}  // namespace smoothq
