#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "pcsp/errors.hpp"
#include "pcsp/instances.hpp"
#include "pcsp/relations.hpp"

namespace pcsp {

// Sorted, duplicate-free set of variables.
using VarSet = std::vector<VarId>;

// (B, G) pair keying the conditional-weight tables.
struct TableKey {
  VarSet head;
  VarSet group;
  friend auto operator<=>(const TableKey&, const TableKey&) = default;
};

// Canonical text form "0,2|1" (variable positions in the universe).
inline std::string encode_key(const VarSet& head, const VarSet& group) {
  std::string out;
  auto put = [&](const VarSet& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(s[i]);
    }
  };
  put(head);
  out += '|';
  put(group);
  return out;
}

inline std::string encode_key(const VarSet& head) {
  auto s = encode_key(head, {});
  s.pop_back();
  return s;
}

inline VarSet decode_varset(const std::string& text) {
  VarSet out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto next = text.find(',', pos);
    if (next == std::string::npos) next = text.size();
    const auto piece = text.substr(pos, next - pos);
    if (piece.empty() ||
        piece.find_first_not_of("0123456789") != std::string::npos)
      throw DomainError("malformed key component '" + text + "'");
    out.push_back(static_cast<VarId>(std::stoul(piece)));
    pos = next + 1;
  }
  if (!std::is_sorted(out.begin(), out.end()) ||
      std::adjacent_find(out.begin(), out.end()) != out.end())
    throw DomainError("key component '" + text + "' is not canonical");
  return out;
}

inline TableKey decode_key(const std::string& text) {
  const auto bar = text.find('|');
  if (bar == std::string::npos || text.find('|', bar + 1) != std::string::npos)
    throw DomainError("malformed table key '" + text + "'");
  return TableKey{decode_varset(text.substr(0, bar)),
                  decode_varset(text.substr(bar + 1))};
}

// Checker of a machine that never accepts.
struct AlwaysReject {
  friend bool operator==(const AlwaysReject&, const AlwaysReject&) = default;
};

// Guess-and-check program for CSP(Gamma)_{k,t}: every constraint touched by
// the guess passes its membership check, and every constraint that rejects
// the empty tuple is touched.
struct AppearanceChecker {
  std::vector<std::vector<std::size_t>> touching;  // E_v per universe variable
  std::vector<std::size_t> required;               // D
  std::vector<Constraint> constraints;
  CostModel cost;
  std::uint64_t t0 = 0;
  friend bool operator==(const AppearanceChecker&,
                         const AppearanceChecker&) = default;
};

// Table-driven program for CSP(CW^{[b]})_k.
struct CWChecker {
  std::uint32_t b = 0;
  std::map<TableKey, std::uint64_t> delta_sizes;  // |Delta_{B,G}|
  std::map<TableKey, std::uint64_t> lambda;       // Lambda_{B,G}
  std::map<VarSet, std::uint64_t> delta_empty;    // |Delta_{B,{}}|
  std::uint64_t input_size = 0;  // n in the table and partial-sum bounds
  friend bool operator==(const CWChecker&, const CWChecker&) = default;
};

struct GuessCheckMachine;

// Accepts a guess iff both components accept that same guess.
struct Combined {
  std::shared_ptr<const GuessCheckMachine> first;
  std::shared_ptr<const GuessCheckMachine> second;
  friend bool operator==(const Combined& a, const Combined& b);
};

// Nondeterministically guesses A with |A| <= k0 from the universe, then runs
// the deterministic checker; guesses of size other than k0 fail the embedded
// weight check. `budget` bounds the checker's steps on any branch.
struct GuessCheckMachine {
  std::vector<std::string> universe;
  std::uint32_t k0 = 0;
  std::uint64_t budget = 0;
  std::variant<AlwaysReject, AppearanceChecker, CWChecker, Combined> checker;

  friend bool operator==(const GuessCheckMachine&,
                         const GuessCheckMachine&) = default;
};

inline bool operator==(const Combined& a, const Combined& b) {
  return *a.first == *b.first && *a.second == *b.second;
}

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t r) {
  if (r > n) return 0;
  r = std::min(r, n - r);
  std::uint64_t out = 1;
  for (std::uint64_t i = 1; i <= r; ++i) out = out * (n - r + i) / i;
  return out;
}

inline std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > UINT64_MAX / a) return UINT64_MAX;
  return a * b;
}

// Size of an instance's encoding: variables plus total scope length.
inline std::uint64_t input_size(const Instance& inst) {
  std::uint64_t n = inst.num_variables();
  for (const auto& c : inst.body()) n += c.scope.size();
  return n;
}

// ---------------------------------------------------------------------------
// Budgets. All are functions of the parameters and the cost model only.

// Per branch: weight check, building the touched set (<= k0*t0), computing
// every T (sum of |T| <= k0*t0), at most k0*t0 membership calls at weight
// <= k0*t0, and the D inclusion test (|D| <= k0*t0).
inline std::uint64_t appearance_budget(std::uint64_t k0, std::uint64_t t0,
                                       const CostModel& cm,
                                       std::uint64_t max_index) {
  const std::uint64_t kt = k0 * t0;
  return 1 + 3 * kt + kt * cm.cost(max_index, kt);
}

namespace detail {

// Lookups charge 1 + key length; additions and comparisons charge 1.
inline std::uint64_t cw_step2_charge(std::uint64_t k0, std::uint64_t b,
                                     std::uint64_t head_size) {
  std::uint64_t s = 0;
  for (std::uint64_t g = 0; g <= std::min(b + 1, k0); ++g)
    s += binomial(k0, g) * (2 + head_size + g);
  return s;
}

inline std::uint64_t cw_step3_charge(std::uint64_t k0, std::uint64_t b,
                                     std::uint64_t head_size) {
  std::uint64_t s = 2 + head_size;
  for (std::uint64_t g = 1; g <= std::min(b, k0); ++g)
    s += binomial(k0, g) * (2 + head_size + g);
  return s;
}

}  // namespace detail

// Exact cost of a branch that passes both table steps.
inline std::uint64_t cw_budget(std::uint64_t k0, std::uint64_t b) {
  std::uint64_t total = 1;
  for (std::uint64_t j = 0; j <= k0; ++j)
    total += binomial(k0, j) * (detail::cw_step2_charge(k0, b, j) +
                                detail::cw_step3_charge(k0, b, j));
  return total;
}

inline std::uint64_t combined_budget(const GuessCheckMachine& a,
                                     const GuessCheckMachine& b) {
  return a.budget + b.budget + a.k0 + 1;
}

// ---------------------------------------------------------------------------
// Appearance reduction (parameters k, t).

inline GuessCheckMachine reduce_appearance(const Instance& inst,
                                           const CostModel& cm = {}) {
  if (inst.weight().kind != WeightMode::Exact)
    throw UsageError(
        "reduce_appearance expects an exact weight; lift at-most instances "
        "first");
  const auto n = inst.num_variables();
  AppearanceChecker chk;
  chk.touching.assign(n, {});
  for (std::size_t i = 0; i < inst.body().size(); ++i) {
    const auto& c = inst.body()[i];
    for (VarId v : c.scope)
      if (chk.touching[v].empty() || chk.touching[v].back() != i)
        chk.touching[v].push_back(i);
    if (!c.relation.contains_unchecked({})) chk.required.push_back(i);
  }
  chk.constraints = inst.body();
  chk.cost = cm;
  chk.t0 = param_t(inst);

  GuessCheckMachine m{inst.variables(), inst.weight().k, 0, AlwaysReject{}};
  if (chk.required.size() > std::uint64_t{m.k0} * chk.t0) return m;
  std::uint64_t max_index = 1;
  for (const auto& c : inst.body())
    max_index = std::max(max_index, c.relation.index());
  m.budget = appearance_budget(m.k0, chk.t0, cm, max_index);
  m.checker = std::move(chk);
  return m;
}

// ---------------------------------------------------------------------------
// Conditional-weight tables.

// b such that every body relation is CW^{[b]}.
inline std::uint32_t cw_bound_of(const Instance& inst) {
  std::optional<std::uint32_t> b;
  for (std::size_t i = 0; i < inst.body().size(); ++i) {
    const auto* r = inst.body()[i].relation.as_cw();
    if (!r)
      throw UsageError("constraint " + std::to_string(i) +
                       " is not a CW relation");
    const auto& ws = r->weights;
    const auto size = static_cast<std::uint32_t>(ws.values().size());
    if (ws.kind() != WeightKind::Finite ||
        !(ws == WeightSet::initial_segment(size)))
      throw UsageError("constraint " + std::to_string(i) + " has weights " +
                       ws.to_string() + ", not an initial segment [b]");
    if (b && *b != size)
      throw UsageError("body mixes CW^[" + std::to_string(*b) + "] and CW^[" +
                       std::to_string(size) + "]");
    b = size;
  }
  return b.value_or(0);
}

namespace detail {

struct CWShape {
  VarSet head;
  VarSet tail;
  std::map<VarId, std::uint64_t> tail_mult;
};

inline CWShape cw_shape(const Constraint& c) {
  const auto* r = c.relation.as_cw();
  CWShape s;
  for (std::uint32_t j = 0; j < r->head; ++j) s.head.push_back(c.scope[j]);
  for (std::uint32_t j = r->head; j < r->head + r->tail; ++j)
    ++s.tail_mult[c.scope[j]];
  s.head = canonical_set(std::move(s.head));
  for (const auto& [v, _] : s.tail_mult) s.tail.push_back(v);
  return s;
}

template <class F>
void for_each_subset_up_to(const VarSet& base, std::size_t limit, F&& f) {
  VarSet cur;
  auto rec = [&](auto&& self, std::size_t from) -> void {
    f(static_cast<const VarSet&>(cur));
    if (cur.size() == limit) return;
    for (std::size_t i = from; i < base.size(); ++i) {
      cur.push_back(base[i]);
      self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
}

}  // namespace detail

// Constraint indices i with head image exactly B and G inside the tail image.
inline std::vector<std::size_t> delta_set(const Instance& inst,
                                          const VarSet& head,
                                          const VarSet& group) {
  cw_bound_of(inst);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < inst.body().size(); ++i) {
    const auto s = detail::cw_shape(inst.body()[i]);
    if (s.head == head && is_subset(group, s.tail)) out.push_back(i);
  }
  return out;
}

// n * sum_{i=0}^{b+1} C(n, i), saturating.
inline std::uint64_t cw_table_capacity(std::uint64_t n, std::uint64_t b) {
  std::uint64_t sum = 0;
  for (std::uint64_t i = 0; i <= b + 1 && i <= n; ++i) {
    sum += binomial(n, i);
    if (sum > UINT64_MAX / 2) return UINT64_MAX;
  }
  return saturating_mul(n, sum);
}

// Stores |Delta_{B,G}| and Lambda_{B,G} for the pairs witnessed by some
// constraint with head image B (|B| <= k0) and G inside its tail image
// (|G| <= min(b+1, k0)). Every other pair reads as 0.
inline CWChecker build_cw_tables(const Instance& inst, std::uint32_t k0) {
  CWChecker t;
  t.b = cw_bound_of(inst);
  t.input_size = input_size(inst);
  const std::size_t g_limit = std::min<std::uint64_t>(t.b + 1, k0);
  for (const auto& c : inst.body()) {
    const auto s = detail::cw_shape(c);
    if (s.head.size() > k0) continue;
    detail::for_each_subset_up_to(s.tail, g_limit, [&](const VarSet& g) {
      std::uint64_t mult = 0;
      for (VarId v : g) mult += s.tail_mult.at(v);
      TableKey key{s.head, g};
      ++t.delta_sizes[key];
      auto& lam = t.lambda[key];
      lam = std::max(lam, mult);
      if (g.empty()) ++t.delta_empty[s.head];
    });
  }
  if (t.delta_sizes.size() > cw_table_capacity(t.input_size, t.b))
    throw std::logic_error("conditional-weight table exceeds n*sum C(n,i)");
  for (const auto& [key, _] : t.delta_sizes)
    if (key.head.size() > k0 || key.group.size() > g_limit)
      throw std::logic_error("table key longer than the parameter allows");
  return t;
}

inline std::uint64_t lookup(const std::map<TableKey, std::uint64_t>& table,
                            const VarSet& head, const VarSet& group) {
  auto it = table.find(TableKey{head, group});
  return it == table.end() ? 0 : it->second;
}

// sum over nonempty G inside A with |G| <= b of (-1)^{|G|-1} |Delta_{B,G}|.
inline std::int64_t inclusion_exclusion_union(const CWChecker& tables,
                                              const VarSet& head,
                                              const VarSet& guess,
                                              std::uint32_t b) {
  std::int64_t sum = 0;
  detail::for_each_subset_up_to(guess, b, [&](const VarSet& g) {
    if (g.empty()) return;
    const auto d = static_cast<std::int64_t>(lookup(tables.delta_sizes, head, g));
    sum += g.size() % 2 == 1 ? d : -d;
  });
  return sum;
}

inline GuessCheckMachine reduce_cw(const Instance& inst) {
  if (inst.weight().kind != WeightMode::Exact)
    throw UsageError(
        "reduce_cw expects an exact weight; lift at-most instances first");
  auto tables = build_cw_tables(inst, inst.weight().k);
  const auto b = tables.b;
  return GuessCheckMachine{inst.variables(), inst.weight().k,
                           cw_budget(inst.weight().k, b), std::move(tables)};
}

inline GuessCheckMachine combine_machines(const GuessCheckMachine& first,
                                          const GuessCheckMachine& second) {
  if (first.universe != second.universe)
    throw UsageError("combined machines must share their universe");
  if (first.k0 != second.k0)
    throw UsageError("combined machines must share their guess bound");
  return GuessCheckMachine{
      first.universe, first.k0, combined_budget(first, second),
      Combined{std::make_shared<const GuessCheckMachine>(first),
               std::make_shared<const GuessCheckMachine>(second)}};
}

// ---------------------------------------------------------------------------
// Simulation.

struct SimulateOptions {
  // Cut guess prefixes that every extension rejects. The verdict and the
  // returned witness are unchanged; only fewer branches are run.
  bool prune = false;
  // Keep exploring after the first accepting branch (for step statistics).
  bool stop_at_first_accept = true;
  // Abort with CapacityError after this many branches; 0 = unlimited.
  std::uint64_t branch_limit = 0;
};

struct SimulationResult {
  bool accepted = false;
  std::optional<Assignment> witness;  // first accepting guess
  std::uint64_t max_branch_steps = 0;
  std::uint64_t branches = 0;
};

namespace detail {

struct BranchOutcome {
  bool accepted = false;
  std::uint64_t steps = 0;
};

class CompiledChecker {
 public:
  virtual ~CompiledChecker() = default;
  // `in_guess` is the membership mask of `guess` over the universe.
  virtual BranchOutcome run(const std::vector<VarId>& guess,
                            const std::vector<char>& in_guess) const = 0;
  // Called after variable p is decided (all of 0..p are); false if no
  // completion of the prefix can be accepted.
  virtual bool prefix_ok(VarId p, const std::vector<char>& in_guess) const = 0;
};

class AlwaysRejectRun final : public CompiledChecker {
 public:
  BranchOutcome run(const std::vector<VarId>&,
                    const std::vector<char>&) const override {
    return {false, 0};
  }
  bool prefix_ok(VarId, const std::vector<char>&) const override {
    return false;
  }
};

class AppearanceRun final : public CompiledChecker {
 public:
  AppearanceRun(const AppearanceChecker& chk, std::uint32_t k0,
                std::size_t universe)
      : chk_(chk), k0_(k0), finalizing_(universe) {
    for (std::size_t i = 0; i < chk.constraints.size(); ++i) {
      const auto& s = chk.constraints[i].scope;
      finalizing_[*std::max_element(s.begin(), s.end())].push_back(i);
    }
  }

  BranchOutcome run(const std::vector<VarId>& guess,
                    const std::vector<char>& in_guess) const override {
    BranchOutcome out{false, 1};
    if (guess.size() != k0_) return out;
    std::vector<std::size_t> touched;
    for (VarId v : guess) {
      const auto& ev = chk_.touching[v];
      out.steps += ev.size();
      touched.insert(touched.end(), ev.begin(), ev.end());
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    for (auto i : touched) {
      const auto& c = chk_.constraints[i];
      const auto t = tuple_of(c, in_guess);
      out.steps += t.size() + chk_.cost.cost(c.relation.index(), t.size());
      if (!c.relation.contains_unchecked(t)) return out;
    }
    out.steps += chk_.required.size();
    if (!is_subset(chk_.required, touched)) return out;
    out.accepted = true;
    return out;
  }

  bool prefix_ok(VarId p, const std::vector<char>& in_guess) const override {
    for (auto i : finalizing_[p])
      if (!satisfies_constraint(chk_.constraints[i], in_guess)) return false;
    return true;
  }

 private:
  const AppearanceChecker& chk_;
  std::uint32_t k0_;
  std::vector<std::vector<std::size_t>> finalizing_;
};

class CWRun final : public CompiledChecker {
 public:
  CWRun(const CWChecker& chk, std::uint32_t k0, std::size_t universe)
      : chk_(chk), k0_(k0), finalizing_(universe) {
    if (k0 > 20)
      throw CapacityError("table checker simulation supports k0 <= 20");
    const std::uint32_t g_limit = std::min(chk.b + 1, k0);
    for (std::uint32_t m = 0; m < (1u << k0); ++m) {
      if (std::popcount(m) <= static_cast<int>(g_limit)) step2_groups_.push_back(m);
      if (m != 0 && std::popcount(m) <= static_cast<int>(std::min(chk.b, k0)))
        step3_groups_.push_back(m);
    }
    for (std::uint32_t j = 0; j <= k0; ++j) {
      step2_charge_.push_back(cw_step2_charge(k0, chk.b, j));
      step3_charge_.push_back(cw_step3_charge(k0, chk.b, j));
    }
    for (const auto& [key, value] : chk.delta_sizes)
      delta_[pack(key.head, key.group)] = value;
    for (const auto& [key, value] : chk.lambda)
      lambda_[pack(key.head, key.group)] = value;
    for (const auto& [head, value] : chk.delta_empty) {
      delta_empty_[pack(head)] = value;
      heads_.emplace(head, HeadInfo{});
    }
    for (const auto& [key, _] : chk.delta_sizes)
      if (key.group.size() == 1) heads_[key.head].tails.push_back(key.group[0]);
    for (auto& [head, info] : heads_) {
      VarId last = 0;
      for (VarId v : head) last = std::max(last, v);
      for (VarId v : info.tails) last = std::max(last, v);
      if (last < universe) finalizing_[last].push_back(&head);
    }
  }

  BranchOutcome run(const std::vector<VarId>& guess,
                    const std::vector<char>&) const override {
    BranchOutcome out{false, 1};
    if (guess.size() != k0_) return out;
    const std::uint32_t full = (1u << k0_);
    std::vector<char> is_head(full, 0);
    std::string buf;
    VarSet head, group;
    for (std::uint32_t bm = 0; bm < full; ++bm) {
      subset(guess, bm, head);
      buf.clear();
      append(buf, head);
      is_head[bm] = delta_empty_.count(buf) ? 1 : 0;
    }
    // Step 2: Lambda_{B,G} <= b for all B, G inside the guess.
    for (std::uint32_t bm = 0; bm < full; ++bm) {
      const auto hs = static_cast<std::uint32_t>(std::popcount(bm));
      if (!is_head[bm]) {
        out.steps += step2_charge_[hs];
        continue;
      }
      subset(guess, bm, head);
      for (auto gm : step2_groups_) {
        subset(guess, gm, group);
        out.steps += 2 + hs + group.size();
        if (get(lambda_, head, group) > chk_.b) return out;
      }
    }
    // Step 3: the inclusion-exclusion sum equals |Delta_{B,{}}| for all B.
    const auto bound = static_cast<std::int64_t>(
        saturating_mul(chk_.input_size, step3_groups_.size()));
    for (std::uint32_t bm = 0; bm < full; ++bm) {
      const auto hs = static_cast<std::uint32_t>(std::popcount(bm));
      if (!is_head[bm]) {
        out.steps += step3_charge_[hs];
        continue;
      }
      subset(guess, bm, head);
      std::int64_t sum = 0;
      for (auto gm : step3_groups_) {
        subset(guess, gm, group);
        out.steps += 2 + hs + group.size();
        const auto d = static_cast<std::int64_t>(get(delta_, head, group));
        sum += group.size() % 2 == 1 ? d : -d;
        if (sum > bound || sum < -bound)
          throw std::logic_error("inclusion-exclusion partial sum out of range");
      }
      out.steps += 2 + hs;
      buf.clear();
      append(buf, head);
      if (sum != static_cast<std::int64_t>(delta_empty_.at(buf))) return out;
    }
    out.accepted = true;
    return out;
  }

  bool prefix_ok(VarId p, const std::vector<char>& in_guess) const override {
    VarSet group;
    for (const VarSet* hp : finalizing_[p]) {
      const VarSet& head = *hp;
      if (!std::all_of(head.begin(), head.end(),
                       [&](VarId v) { return in_guess[v]; }))
        continue;
      const auto& tails = heads_.at(head).tails;
      VarSet chosen;
      for (VarId v : tails)
        if (in_guess[v]) chosen.push_back(v);
      // Every extension of the prefix adds no tail of this head, so both
      // table steps for B = head are already decided.
      bool ok = true;
      std::int64_t sum = 0;
      for_each_subset_up_to(chosen, std::min(chk_.b + 1, k0_), [&](const VarSet& g) {
        if (!ok) return;
        if (get(lambda_, head, g) > chk_.b) ok = false;
        if (!g.empty() && g.size() <= chk_.b) {
          const auto d = static_cast<std::int64_t>(get(delta_, head, g));
          sum += g.size() % 2 == 1 ? d : -d;
        }
      });
      if (!ok) return false;
      std::string buf;
      append(buf, head);
      if (sum != static_cast<std::int64_t>(delta_empty_.at(buf))) return false;
    }
    return true;
  }

 private:
  struct HeadInfo {
    VarSet tails;
  };

  static void subset(const std::vector<VarId>& guess, std::uint32_t mask,
                     VarSet& out) {
    out.clear();
    for (std::size_t i = 0; mask; ++i, mask >>= 1)
      if (mask & 1) out.push_back(guess[i]);
  }

  static void append(std::string& buf, const VarSet& s) {
    for (VarId v : s) {
      char bytes[sizeof(VarId)];
      std::memcpy(bytes, &v, sizeof v);
      buf.append(bytes, sizeof bytes);
    }
  }

  static std::string pack(const VarSet& head) {
    std::string s;
    append(s, head);
    return s;
  }

  static std::string pack(const VarSet& head, const VarSet& group) {
    std::string s = pack(head);
    s.append(sizeof(VarId), '\xff');
    append(s, group);
    return s;
  }

  std::uint64_t get(const std::unordered_map<std::string, std::uint64_t>& t,
                    const VarSet& head, const VarSet& group) const {
    key_.clear();
    append(key_, head);
    key_.append(sizeof(VarId), '\xff');
    append(key_, group);
    auto it = t.find(key_);
    return it == t.end() ? 0 : it->second;
  }

  const CWChecker& chk_;
  std::uint32_t k0_;
  std::vector<std::uint32_t> step2_groups_;
  std::vector<std::uint32_t> step3_groups_;
  std::vector<std::uint64_t> step2_charge_;
  std::vector<std::uint64_t> step3_charge_;
  std::unordered_map<std::string, std::uint64_t> delta_;
  std::unordered_map<std::string, std::uint64_t> lambda_;
  std::unordered_map<std::string, std::uint64_t> delta_empty_;
  std::map<VarSet, HeadInfo> heads_;
  std::vector<std::vector<const VarSet*>> finalizing_;
  mutable std::string key_;
};

std::unique_ptr<CompiledChecker> compile(const GuessCheckMachine& m);

class CombinedRun final : public CompiledChecker {
 public:
  CombinedRun(const Combined& c, std::uint32_t k0)
      : first_(compile(*c.first)), second_(compile(*c.second)), k0_(k0) {}

  BranchOutcome run(const std::vector<VarId>& guess,
                    const std::vector<char>& in_guess) const override {
    auto a = first_->run(guess, in_guess);
    if (!a.accepted) return a;
    auto b = second_->run(guess, in_guess);
    b.steps += a.steps;
    if (!b.accepted) return b;
    b.steps += k0_ + 1;  // A1 = A2
    return b;
  }

  bool prefix_ok(VarId p, const std::vector<char>& in_guess) const override {
    return first_->prefix_ok(p, in_guess) && second_->prefix_ok(p, in_guess);
  }

 private:
  std::unique_ptr<CompiledChecker> first_;
  std::unique_ptr<CompiledChecker> second_;
  std::uint32_t k0_;
};

inline std::unique_ptr<CompiledChecker> compile(const GuessCheckMachine& m) {
  const auto n = m.universe.size();
  return std::visit(
      [&](const auto& chk) -> std::unique_ptr<CompiledChecker> {
        using T = std::decay_t<decltype(chk)>;
        if constexpr (std::is_same_v<T, AlwaysReject>)
          return std::make_unique<AlwaysRejectRun>();
        else if constexpr (std::is_same_v<T, AppearanceChecker>)
          return std::make_unique<AppearanceRun>(chk, m.k0, n);
        else if constexpr (std::is_same_v<T, CWChecker>)
          return std::make_unique<CWRun>(chk, m.k0, n);
        else
          return std::make_unique<CombinedRun>(chk, m.k0);
      },
      m.checker);
}

class Explorer {
 public:
  Explorer(const GuessCheckMachine& m, const SimulateOptions& opt)
      : m_(m),
        opt_(opt),
        checker_(compile(m)),
        in_guess_(m.universe.size(), 0) {}

  SimulationResult run() {
    if (opt_.prune)
      dfs(0);
    else
      for_each_subset_lex(m_.universe.size(), 0,
                          std::min<std::size_t>(m_.k0, m_.universe.size()),
                          [&](const std::vector<VarId>& a) {
                            for (VarId v : a) in_guess_[v] = 1;
                            const bool go_on = branch(a);
                            for (VarId v : a) in_guess_[v] = 0;
                            return go_on;
                          });
    return result_;
  }

 private:
  bool branch(const std::vector<VarId>& guess) {
    ++result_.branches;
    if (opt_.branch_limit && result_.branches > opt_.branch_limit)
      throw CapacityError("simulation exceeded " +
                          std::to_string(opt_.branch_limit) + " branches");
    const auto out = checker_->run(guess, in_guess_);
    result_.max_branch_steps = std::max(result_.max_branch_steps, out.steps);
    if (out.accepted && !result_.accepted) {
      result_.accepted = true;
      result_.witness = Assignment{guess};
    }
    return !(result_.accepted && opt_.stop_at_first_accept);
  }

  // Include-first over the universe order, which visits same-size guesses in
  // lexicographic order.
  bool dfs(std::size_t p) {
    const std::size_t n = m_.universe.size();
    if (chosen_.size() > m_.k0 || chosen_.size() + (n - p) < m_.k0) return true;
    if (p == n) return branch(chosen_);
    for (int value = 1; value >= 0; --value) {
      in_guess_[p] = static_cast<char>(value);
      if (value) chosen_.push_back(static_cast<VarId>(p));
      bool go_on = true;
      if (chosen_.size() <= m_.k0 &&
          checker_->prefix_ok(static_cast<VarId>(p), in_guess_))
        go_on = dfs(p + 1);
      if (value) chosen_.pop_back();
      in_guess_[p] = 0;
      if (!go_on) return false;
    }
    return true;
  }

  const GuessCheckMachine& m_;
  SimulateOptions opt_;
  std::unique_ptr<CompiledChecker> checker_;
  std::vector<char> in_guess_;
  std::vector<VarId> chosen_;
  SimulationResult result_;
};

}  // namespace detail

// Explores the guesses of Step 1 deterministically, in lexicographic order,
// charging every branch its checker steps.
inline SimulationResult simulate(const GuessCheckMachine& m,
                                 const SimulateOptions& opt = {}) {
  if (std::holds_alternative<AlwaysReject>(m.checker)) return {};
  return detail::Explorer(m, opt).run();
}

}  // namespace pcsp
