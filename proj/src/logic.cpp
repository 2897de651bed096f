#include "bisim/logic.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <deque>
#include <numeric>
#include <optional>
#include <sstream>

#include "bisim/errors.hpp"
#include "bisim/metric.hpp"
#include "bisim/random.hpp"

namespace bisim::logic {

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw PreconditionError("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  num_ = g ? num / g : 0;
  den_ = g ? den / g : 1;
}

std::string Rational::str() const {
  return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
}

Rational parse_rational(std::string_view text) {
  auto parse_int = [&](std::string_view s) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
      throw PreconditionError("malformed rational '" + std::string(text) + "'");
    return v;
  };
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return Rational(parse_int(text));
  return Rational(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
}

namespace {

FormulaPtr node(Op op, std::vector<FormulaPtr> children = {}) {
  for (const auto& c : children)
    if (!c) throw PreconditionError("null subformula");
  auto f = std::make_shared<Formula>();
  f->op = op;
  f->children = std::move(children);
  return f;
}

}  // namespace

FormulaPtr constant(Rational q) {
  auto f = std::make_shared<Formula>();
  f->op = Op::Const;
  f->constant = q;
  return f;
}

FormulaPtr var(std::string name) {
  if (name.empty()) throw PreconditionError("empty variable name");
  auto f = std::make_shared<Formula>();
  f->op = Op::Var;
  f->var = std::move(name);
  return f;
}

FormulaPtr sup(std::vector<FormulaPtr> fs) {
  if (fs.empty()) throw PreconditionError("sup needs at least one operand");
  return node(Op::Sup, std::move(fs));
}

FormulaPtr inf(std::vector<FormulaPtr> fs) {
  if (fs.empty()) throw PreconditionError("inf needs at least one operand");
  return node(Op::Inf, std::move(fs));
}

FormulaPtr negate(FormulaPtr f) { return node(Op::Negate, {std::move(f)}); }
FormulaPtr abs(FormulaPtr f) { return node(Op::Abs, {std::move(f)}); }

FormulaPtr shift(Rational q, FormulaPtr f) {
  auto n = node(Op::Shift, {std::move(f)});
  std::const_pointer_cast<Formula>(n)->constant = q;
  return n;
}

FormulaPtr scale(Rational q, FormulaPtr f) {
  if (std::abs(q.num()) > q.den()) throw PreconditionError("scale factor must satisfy |q| <= 1");
  auto n = node(Op::Scale, {std::move(f)});
  std::const_pointer_cast<Formula>(n)->constant = q;
  return n;
}

FormulaPtr max(FormulaPtr f, FormulaPtr g) { return node(Op::Max, {std::move(f), std::move(g)}); }
FormulaPtr min(FormulaPtr f, FormulaPtr g) { return node(Op::Min, {std::move(f), std::move(g)}); }
FormulaPtr subtract(FormulaPtr f, FormulaPtr g) {
  return node(Op::Subtract, {std::move(f), std::move(g)});
}

FormulaPtr reward(ActionId a) {
  auto f = std::make_shared<Formula>();
  f->op = Op::Reward;
  f->action = a;
  return f;
}

FormulaPtr trans(ActionId a, FormulaPtr f) {
  auto n = node(Op::Trans, {std::move(f)});
  std::const_pointer_cast<Formula>(n)->action = a;
  return n;
}

FormulaPtr greatest_fix(std::string name, FormulaPtr body) {
  if (name.empty()) throw PreconditionError("empty fixpoint variable");
  auto n = node(Op::Fix, {std::move(body)});
  std::const_pointer_cast<Formula>(n)->var = std::move(name);
  return n;
}

// ---------------------------------------------------------------------------
// S-expressions

namespace {

void write(std::ostream& os, const Formula& f) {
  auto list = [&](const char* head) {
    os << '(' << head;
    for (const auto& c : f.children) {
      os << ' ';
      write(os, *c);
    }
    os << ')';
  };
  switch (f.op) {
    case Op::Const: os << f.constant.str(); return;
    case Op::Var: os << f.var; return;
    case Op::Sup: list("sup"); return;
    case Op::Inf: list("inf"); return;
    case Op::Negate: list("neg"); return;
    case Op::Abs: list("abs"); return;
    case Op::Max: list("max"); return;
    case Op::Min: list("min"); return;
    case Op::Subtract: list("-"); return;
    case Op::Shift:
    case Op::Scale:
      os << '(' << (f.op == Op::Shift ? "shift " : "scale ") << f.constant.str() << ' ';
      write(os, *f.children[0]);
      os << ')';
      return;
    case Op::Reward: os << "(reward " << f.action << ')'; return;
    case Op::Trans:
      os << "(trans " << f.action << ' ';
      write(os, *f.children[0]);
      os << ')';
      return;
    case Op::Fix:
      os << "(nu " << f.var << ' ';
      write(os, *f.children[0]);
      os << ')';
      return;
  }
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  FormulaPtr parse() {
    auto f = expr();
    skip_space();
    if (pos_ != text_.size()) fail("trailing input");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    std::ostringstream os;
    os << "formula parse error at offset " << pos_ << ": " << why;
    throw PreconditionError(os.str());
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string_view atom() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    if (start == pos_) fail("expected an atom");
    return text_.substr(start, pos_ - start);
  }

  static bool numeric(std::string_view a) {
    std::size_t i = a[0] == '-' ? 1 : 0;
    return i < a.size() && std::isdigit(static_cast<unsigned char>(a[i]));
  }

  ActionId action() {
    const auto a = atom();
    ActionId v = 0;
    auto [ptr, ec] = std::from_chars(a.data(), a.data() + a.size(), v);
    if (ec != std::errc() || ptr != a.data() + a.size()) fail("expected an action index");
    return v;
  }

  void expect_close() {
    skip_space();
    if (pos_ >= text_.size() || text_[pos_] != ')') fail("expected ')'");
    ++pos_;
  }

  std::vector<FormulaPtr> rest() {
    std::vector<FormulaPtr> out;
    for (;;) {
      skip_space();
      if (pos_ >= text_.size()) fail("unterminated list");
      if (text_[pos_] == ')') {
        ++pos_;
        return out;
      }
      out.push_back(expr());
    }
  }

  FormulaPtr expr() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (text_[pos_] == ')') fail("unexpected ')'");
    if (text_[pos_] != '(') {
      const auto a = atom();
      if (numeric(a)) return constant(parse_rational(a));
      return var(std::string(a));
    }
    ++pos_;
    const std::string head(atom());
    auto unary = [&](auto make) {
      auto args = rest();
      if (args.size() != 1) fail(head + " takes one operand");
      return make(std::move(args[0]));
    };
    auto binary = [&](auto make) {
      auto args = rest();
      if (args.size() != 2) fail(head + " takes two operands");
      return make(std::move(args[0]), std::move(args[1]));
    };
    if (head == "sup") return sup(rest());
    if (head == "inf") return inf(rest());
    if (head == "neg") return unary([](FormulaPtr f) { return negate(std::move(f)); });
    if (head == "abs") return unary([](FormulaPtr f) { return abs(std::move(f)); });
    if (head == "max") return binary([](FormulaPtr f, FormulaPtr g) { return max(f, g); });
    if (head == "min") return binary([](FormulaPtr f, FormulaPtr g) { return min(f, g); });
    if (head == "-") return binary([](FormulaPtr f, FormulaPtr g) { return subtract(f, g); });
    if (head == "shift" || head == "scale") {
      const Rational q = parse_rational(atom());
      auto f = unary([](FormulaPtr x) { return x; });
      return head == "shift" ? shift(q, std::move(f)) : scale(q, std::move(f));
    }
    if (head == "reward") {
      const ActionId a = action();
      expect_close();
      return reward(a);
    }
    if (head == "trans") {
      const ActionId a = action();
      return trans(a, unary([](FormulaPtr x) { return x; }));
    }
    if (head == "nu") {
      std::string name(atom());
      if (numeric(name)) fail("fixpoint variable must be a name");
      return greatest_fix(std::move(name), unary([](FormulaPtr x) { return x; }));
    }
    fail("unknown operator '" + head + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

/// Polarity of `name` below f: returns false if it occurs negatively or
/// under abs.
bool positive_in(const Formula& f, const std::string& name, bool positive) {
  switch (f.op) {
    case Op::Var: return f.var != name || positive;
    case Op::Const:
    case Op::Reward: return true;
    case Op::Fix:
      return f.var == name || positive_in(*f.children[0], name, positive);
    case Op::Negate: return positive_in(*f.children[0], name, !positive);
    case Op::Scale:
      return positive_in(*f.children[0], name, f.constant.num() < 0 ? !positive : positive);
    case Op::Subtract:
      return positive_in(*f.children[0], name, positive) &&
             positive_in(*f.children[1], name, !positive);
    case Op::Abs: {
      // abs is not monotone: the variable must not occur at all.
      return positive_in(*f.children[0], name, true) &&
             positive_in(*f.children[0], name, false);
    }
    default:
      return std::all_of(f.children.begin(), f.children.end(),
                         [&](const FormulaPtr& c) { return positive_in(*c, name, positive); });
  }
}

double constant_mass(const Formula& f) {
  double total = (f.op == Op::Const || f.op == Op::Shift) ? std::abs(f.constant.value()) : 0.0;
  for (const auto& c : f.children) total += constant_mass(*c);
  return total;
}

class Evaluator {
 public:
  Evaluator(const FiniteMdp& m, Valuation valuation, double top)
      : m_(m), env_(std::move(valuation)), top_(top) {}

  std::vector<double> eval(const Formula& f) {
    const std::size_t n = m_.n_states();
    switch (f.op) {
      case Op::Const: return std::vector<double>(n, f.constant.value());
      case Op::Var: {
        auto it = env_.find(f.var);
        if (it == env_.end()) throw PreconditionError("unbound variable '" + f.var + "'");
        if (it->second.size() != n)
          throw StructuralError("valuation for '" + f.var + "' has the wrong size");
        return it->second;
      }
      case Op::Sup:
      case Op::Inf: {
        auto acc = eval(*f.children[0]);
        for (std::size_t k = 1; k < f.children.size(); ++k) {
          auto v = eval(*f.children[k]);
          for (std::size_t s = 0; s < n; ++s)
            acc[s] = f.op == Op::Sup ? std::max(acc[s], v[s]) : std::min(acc[s], v[s]);
        }
        return acc;
      }
      case Op::Negate: return map(eval(*f.children[0]), [](double x) { return -x; });
      case Op::Abs: return map(eval(*f.children[0]), [](double x) { return std::abs(x); });
      case Op::Shift: {
        const double q = f.constant.value();
        return map(eval(*f.children[0]), [q](double x) { return x + q; });
      }
      case Op::Scale: {
        const double q = f.constant.value();
        return map(eval(*f.children[0]), [q](double x) { return q * x; });
      }
      case Op::Max:
      case Op::Min:
      case Op::Subtract: {
        auto a = eval(*f.children[0]);
        auto b = eval(*f.children[1]);
        for (std::size_t s = 0; s < n; ++s)
          a[s] = f.op == Op::Max   ? std::max(a[s], b[s])
                 : f.op == Op::Min ? std::min(a[s], b[s])
                                   : a[s] - b[s];
        return a;
      }
      case Op::Reward: {
        check_action(f.action);
        std::vector<double> v(n);
        for (StateId s = 0; s < n; ++s) v[s] = m_.reward(s, f.action);
        return v;
      }
      case Op::Trans: {
        check_action(f.action);
        const auto inner = eval(*f.children[0]);
        std::vector<double> v(n);
        for (StateId s = 0; s < n; ++s) {
          auto row = m_.next(s, f.action);
          double e = 0.0;
          for (StateId t = 0; t < n; ++t) e += row[t] * inner[t];
          v[s] = m_.gamma() * e;
        }
        return v;
      }
      case Op::Fix: return fix(f);
    }
    throw StructuralError("unknown formula node");
  }

 private:
  template <class Fn>
  static std::vector<double> map(std::vector<double> v, Fn fn) {
    for (double& x : v) x = fn(x);
    return v;
  }

  void check_action(ActionId a) const {
    if (a >= m_.n_actions()) {
      std::ostringstream os;
      os << "formula uses action " << a << " but the MDP has " << m_.n_actions();
      throw StructuralError(os.str());
    }
  }

  std::vector<double> fix(const Formula& f) {
    if (!positive_in(*f.children[0], f.var, true))
      throw PreconditionError("fixpoint body uses '" + f.var + "' non-positively");
    std::optional<std::vector<double>> saved;
    if (auto it = env_.find(f.var); it != env_.end()) saved = it->second;

    std::vector<double> current(m_.n_states(), top_);
    const std::size_t cap = default_iteration_cap(kFixpointTolerance, m_.gamma());
    for (std::size_t it = 0;; ++it) {
      if (it >= cap) throw ConvergenceError("fixpoint iteration for '" + f.var + "' hit its cap");
      env_[f.var] = current;
      auto next = eval(*f.children[0]);
      const double change = sup_distance(next, current);
      current = std::move(next);
      if (change <= kFixpointTolerance) break;
    }
    if (saved)
      env_[f.var] = std::move(*saved);
    else
      env_.erase(f.var);
    return current;
  }

  const FiniteMdp& m_;
  Valuation env_;
  double top_;
};

}  // namespace

std::string to_sexpr(const Formula& f) {
  std::ostringstream os;
  write(os, f);
  return os.str();
}

FormulaPtr parse_sexpr(std::string_view text) { return Parser(text).parse(); }

bool fixpoints_positive(const Formula& f) {
  if (f.op == Op::Fix && !positive_in(*f.children[0], f.var, true)) return false;
  return std::all_of(f.children.begin(), f.children.end(),
                     [](const FormulaPtr& c) { return fixpoints_positive(*c); });
}

std::vector<double> eval_formula(const FiniteMdp& m, const Formula& f,
                                 const Valuation& valuation) {
  const double top = (m.reward_bound() + constant_mass(f)) / (1.0 - m.gamma());
  return Evaluator(m, valuation, top).eval(f);
}

std::vector<double> mimic_deviation(const FiniteMdp& m, StateId s1, std::size_t depth) {
  if (s1 >= m.n_states()) throw StructuralError("state out of range");
  MetricOperator op(m);
  Matrix d(m.n_states(), m.n_states());
  for (std::size_t k = 0; k < depth; ++k) d = op.apply(d);
  auto row = d.row(s1);
  return {row.begin(), row.end()};
}

// ---------------------------------------------------------------------------
// Random safe formulas

namespace {

struct GenContext {
  const std::string* var = nullptr;  // fixpoint variable in scope, if any
  bool guarded = false;              // below a trans since the binder
  bool monotone = false;             // inside a fixpoint body
};

class Generator {
 public:
  Generator(const FiniteMdp& m, std::mt19937_64& engine, const GeneratorOptions& options)
      : m_(m), engine_(engine), options_(options) {}

  FormulaPtr gen(std::size_t depth, GenContext ctx) {
    if (depth == 0 || pick(4) == 0) return leaf(ctx);
    switch (pick(ctx.monotone ? 8 : 12)) {
      case 0: return shift(rational(), gen(depth - 1, ctx));
      case 1: {
        Rational q = unit_rational();
        if (ctx.monotone && q.num() < 0) q = Rational(-q.num(), q.den());
        return scale(q, gen(depth - 1, ctx));
      }
      case 2: return max(gen(depth - 1, ctx), gen(depth - 1, ctx));
      case 3: return min(gen(depth - 1, ctx), gen(depth - 1, ctx));
      case 4: return many(depth, ctx, true);
      case 5: return many(depth, ctx, false);
      case 6: return trans(action(), gen(depth - 1, guarded(ctx)));
      case 7: {
        // R(.,a) + gamma E[f]: the shape of one operator application.
        const ActionId a = action();
        return subtract(reward(a), negate(trans(a, gen(depth - 1, guarded(ctx)))));
      }
      case 8: return negate(gen(depth - 1, ctx));
      case 9: return abs(gen(depth - 1, ctx));
      case 10: {
        const ActionId a = action();
        return subtract(reward(a), trans(a, gen(depth - 1, guarded(ctx))));
      }
      default: {
        if (ctx.var) return abs(gen(depth - 1, ctx));
        std::string& name = names_.emplace_back("X" + std::to_string(names_.size()));
        GenContext inner{&name, false, true};
        return greatest_fix(name, gen(depth - 1, inner));
      }
    }
  }

 private:
  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(uniform_index(engine_, n)); }
  ActionId action() { return pick(m_.n_actions()); }

  static GenContext guarded(GenContext ctx) {
    ctx.guarded = true;
    return ctx;
  }

  Rational rational() {
    const std::int64_t den = 1 + static_cast<std::int64_t>(pick(8));
    const auto span = static_cast<std::int64_t>(std::floor(options_.constant_bound * den));
    const std::int64_t num = static_cast<std::int64_t>(pick(2 * span + 1)) - span;
    return Rational(num, den);
  }

  Rational unit_rational() {
    const std::int64_t den = 1 + static_cast<std::int64_t>(pick(8));
    return Rational(static_cast<std::int64_t>(pick(2 * den + 1)) - den, den);
  }

  FormulaPtr many(std::size_t depth, GenContext ctx, bool is_sup) {
    std::vector<FormulaPtr> fs(1 + pick(3));
    for (auto& f : fs) f = gen(depth - 1, ctx);
    return is_sup ? sup(std::move(fs)) : inf(std::move(fs));
  }

  FormulaPtr leaf(GenContext ctx) {
    if (ctx.var && ctx.guarded && pick(2) == 0) return var(*ctx.var);
    switch (pick(ctx.monotone ? 2 : 3)) {
      case 0: return constant(rational());
      case 1: return reward(action());
      default: return abs(subtract(reward(action()), constant(rational())));
    }
  }

  const FiniteMdp& m_;
  std::mt19937_64& engine_;
  GeneratorOptions options_;
  std::deque<std::string> names_;
};

}  // namespace

FormulaPtr random_safe_formula(const FiniteMdp& m, std::mt19937_64& engine,
                               const GeneratorOptions& options) {
  Generator gen(m, engine, options);
  return gen.gen(options.max_depth, {});
}

SoundnessReport soundness_probe(const FiniteMdp& m, const Matrix& d_m, std::uint64_t seed,
                                std::size_t count) {
  const std::size_t n = m.n_states();
  if (d_m.rows() != n || d_m.cols() != n) throw StructuralError("metric size mismatch");
  SoundnessReport r;
  std::mt19937_64 engine(seed);
  GeneratorOptions options;
  options.constant_bound = std::max(1.0, m.reward_bound());
  for (std::size_t k = 0; k < count; ++k) {
    const FormulaPtr f = random_safe_formula(m, engine, options);
    const auto v = eval_formula(m, *f);
    ++r.formulas;
    for (StateId s = 0; s < n; ++s)
      for (StateId t = s + 1; t < n; ++t) {
        const double excess = std::abs(v[s] - v[t]) - d_m(s, t);
        ++r.pairs_checked;
        if (excess > kSoundnessSlack) ++r.violations;
        if (excess > r.max_excess) {
          r.max_excess = excess;
          r.worst_formula = to_sexpr(*f);
        }
      }
  }
  r.ok = r.violations == 0;
  return r;
}

CompletenessProbe completeness_probe(const FiniteMdp& m, const Matrix& d_m, StateId s1,
                                     StateId s2, std::size_t depth) {
  if (s2 >= m.n_states()) throw StructuralError("state out of range");
  CompletenessProbe p;
  p.lower_bound = std::abs(mimic_deviation(m, s1, depth)[s2]);
  p.gap = d_m(s1, s2) - p.lower_bound;
  return p;
}

}  // namespace bisim::logic
