#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "bisim/matrix.hpp"
#include "bisim/mdp.hpp"

namespace bisim::logic {

/// Normalised rational p/q with q > 0.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string str() const;

  bool operator==(const Rational&) const = default;

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// Parses "p/q" or "p".
Rational parse_rational(std::string_view text);

enum class Op {
  Const,     // q
  Var,       // X
  Sup,       // (sup f...)
  Inf,       // (inf f...)
  Negate,    // (neg f)
  Abs,       // (abs f)
  Shift,     // (shift q f)     f + q
  Scale,     // (scale q f)     q * f, |q| <= 1
  Max,       // (max f g)
  Min,       // (min f g)
  Subtract,  // (- f g)
  Reward,    // (reward a)      R(s, a)
  Trans,     // (trans a f)     gamma * <P(s, a), f>
  Fix,       // (nu X f)        greatest fixed point
};

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
  Op op = Op::Const;
  Rational constant;  // Const, Shift, Scale
  std::string var;    // Var, Fix
  ActionId action = 0;  // Reward, Trans
  std::vector<FormulaPtr> children;
};

// Constructors. They check arity and |q| <= 1 for scale.
FormulaPtr constant(Rational q);
FormulaPtr var(std::string name);
FormulaPtr sup(std::vector<FormulaPtr> fs);
FormulaPtr inf(std::vector<FormulaPtr> fs);
FormulaPtr negate(FormulaPtr f);
FormulaPtr abs(FormulaPtr f);
FormulaPtr shift(Rational q, FormulaPtr f);
FormulaPtr scale(Rational q, FormulaPtr f);
FormulaPtr max(FormulaPtr f, FormulaPtr g);
FormulaPtr min(FormulaPtr f, FormulaPtr g);
FormulaPtr subtract(FormulaPtr f, FormulaPtr g);
FormulaPtr reward(ActionId a);
FormulaPtr trans(ActionId a, FormulaPtr f);
FormulaPtr greatest_fix(std::string name, FormulaPtr body);

std::string to_sexpr(const Formula& f);
inline std::string to_sexpr(const FormulaPtr& f) { return to_sexpr(*f); }
/// Throws std::invalid_argument with the offending position on bad input.
FormulaPtr parse_sexpr(std::string_view text);

/// True iff every fixpoint body uses its variable only positively
/// (no negate, abs, right side of '-', or negative scale above it).
bool fixpoints_positive(const Formula& f);

using Valuation = std::map<std::string, std::vector<double>, std::less<>>;

inline constexpr double kFixpointTolerance = 1e-9;

/**
 * Semantics over the states of m. Trans folds in the discount:
 * (trans a f)(s) = gamma * sum_t P(s,a,t) f(t). A fixpoint is iterated from
 * the constant (R_max + sum of |rational constants in f|) / (1 - gamma)
 * until the sup-norm change is <= 1e-9.
 */
std::vector<double> eval_formula(const FiniteMdp& m, const Formula& f,
                                 const Valuation& valuation = {});
inline std::vector<double> eval_formula(const FiniteMdp& m, const FormulaPtr& f,
                                        const Valuation& valuation = {}) {
  return eval_formula(m, *f, valuation);
}

/// Row s1 of the depth-th Picard iterate of the metric operator from 0,
/// i.e. the depth-k truncation of the mimicking formula for s1.
std::vector<double> mimic_deviation(const FiniteMdp& m, StateId s1, std::size_t depth);

struct GeneratorOptions {
  std::size_t max_depth = 6;
  double constant_bound = 1.0;  ///< rationals drawn from [-bound, bound]
};

/// Random formula from a grammar whose constructors are all non-expansive
/// for the behavioural metric.
FormulaPtr random_safe_formula(const FiniteMdp& m, std::mt19937_64& engine,
                               const GeneratorOptions& options = {});

struct SoundnessReport {
  std::size_t formulas = 0;
  std::size_t pairs_checked = 0;
  std::size_t violations = 0;
  /// max over formulas and pairs of |f(s) - f(t)| - d_M(s,t)
  double max_excess = -1.0;
  std::string worst_formula;
  bool ok = false;
};

inline constexpr double kSoundnessSlack = 1e-7;

SoundnessReport soundness_probe(const FiniteMdp& m, const Matrix& d_m, std::uint64_t seed,
                                std::size_t count);

struct CompletenessProbe {
  double lower_bound = 0.0;
  double gap = 0.0;  ///< d_M(s1,s2) - lower_bound
};

CompletenessProbe completeness_probe(const FiniteMdp& m, const Matrix& d_m, StateId s1,
                                     StateId s2, std::size_t depth);

}  // namespace bisim::logic
