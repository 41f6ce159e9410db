#include "safe/logic/solver.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <deque>
#include <unordered_map>
#include <unordered_set>

#include "safe/logic/builtins.hpp"

namespace safe::logic {

namespace {

using Subst = std::unordered_map<std::string, Term>;

const Term& resolve(const Term& t, const Subst& s) {
  const Term* cur = &t;
  while (cur->is_variable()) {
    auto it = s.find(cur->text());
    if (it == s.end()) break;
    cur = &it->second;
  }
  return *cur;
}

bool unify_terms(const Term& a, const Term& b, Subst& s) {
  const Term& x = resolve(a, s);
  const Term& y = resolve(b, s);
  if (x.is_variable()) {
    if (y.is_variable() && x.text() == y.text()) return true;
    s.emplace(x.text(), y);
    return true;
  }
  if (y.is_variable()) {
    s.emplace(y.text(), x);
    return true;
  }
  return x == y;
}

bool unify_atoms(const Atom& a, const Atom& b, Subst& s) {
  if (a.predicate != b.predicate || a.args.size() != b.args.size())
    return false;
  if (!unify_terms(a.speaker, b.speaker, s)) return false;
  for (size_t i = 0; i < a.args.size(); ++i)
    if (!unify_terms(a.args[i], b.args[i], s)) return false;
  return true;
}

Term apply_term(const Term& t, const Subst& s) { return resolve(t, s); }

Atom apply_atom(const Atom& a, const Subst& s) {
  Atom out;
  out.predicate = a.predicate;
  out.speaker = apply_term(a.speaker, s);
  out.args.reserve(a.args.size());
  for (const auto& arg : a.args) out.args.push_back(apply_term(arg, s));
  return out;
}

Term rename_term(const Term& t, uint64_t tag) {
  if (!t.is_variable()) return t;
  return Term::variable(t.text() + "~" + std::to_string(tag));
}

Atom rename_atom(const Atom& a, uint64_t tag) {
  Atom out;
  out.predicate = a.predicate;
  out.speaker = rename_term(a.speaker, tag);
  out.args.reserve(a.args.size());
  for (const auto& arg : a.args) out.args.push_back(rename_term(arg, tag));
  return out;
}

// Canonical call pattern: variables renamed to _0, _1, ... in order of first
// occurrence (speaker first). Calls that are variants share one table.
Atom canonicalize_call(const Atom& goal, const Subst& s) {
  Atom inst = apply_atom(goal, s);
  std::unordered_map<std::string, std::string> names;
  auto canon = [&](const Term& t) -> Term {
    if (!t.is_variable()) return t;
    auto [it, fresh] =
        names.emplace(t.text(), "_" + std::to_string(names.size()));
    (void)fresh;
    return Term::variable(it->second);
  };
  inst.speaker = canon(inst.speaker);
  for (auto& arg : inst.args) arg = canon(arg);
  return inst;
}

std::string atom_key(const Atom& a) {
  std::string k;
  k += static_cast<char>(a.speaker.kind());
  k += a.speaker.text();
  k += '\x1f';
  k += a.predicate;
  for (const auto& arg : a.args) {
    k += '\x1f';
    k += static_cast<char>(arg.kind());
    k += arg.text();
  }
  return k;
}

void merge_origins(std::vector<uint32_t>& into, const std::vector<uint32_t>& from) {
  if (from.empty()) return;
  into.insert(into.end(), from.begin(), from.end());
  std::sort(into.begin(), into.end());
  into.erase(std::unique(into.begin(), into.end()), into.end());
}

struct Cont {
  uint32_t table_id;  // table this clause contributes answers to
  Atom head;
  std::vector<Atom> body;
  uint32_t next = 0;
  std::vector<uint32_t> origins;  // statement indices used so far
};

struct Table {
  Atom call;
  std::vector<Atom> answers;
  std::vector<std::vector<uint32_t>> answer_origins;
  std::unordered_set<std::string> answer_keys;
  std::vector<uint32_t> consumers;  // cont ids suspended on this table
  bool expanded = false;
};

enum class Ev : uint8_t { Expand, Resume, Feed };

struct Event {
  Ev kind;
  uint32_t a = 0;  // table id (Expand) or cont id (Resume/Feed)
  uint32_t b = 0;  // table id (Feed)
  uint32_t c = 0;  // answer index (Feed)
};

constexpr const char* kQueryPred = "__query__";

class Engine {
 public:
  Engine(const IndexedContext& ctx, const SolveLimits& limits)
      : ctx_(ctx), limits_(limits) {
    if (limits_.deadline_ms > 0)
      deadline_ = std::chrono::steady_clock::now() +
                  std::chrono::milliseconds(limits_.deadline_ms);
  }

  SolveResult run(const std::vector<Atom>& query) {
    // Synthetic clause __query__(vars...) :- q1, ..., qn.
    std::vector<std::string> qvars;
    std::unordered_set<std::string> seen;
    auto collect = [&](const Term& t) {
      if (t.is_variable() && seen.insert(t.text()).second)
        qvars.push_back(t.text());
    };
    for (const auto& a : query) {
      collect(a.speaker);
      for (const auto& arg : a.args) collect(arg);
    }
    Atom qhead;
    qhead.speaker = Term::string("__local__");
    qhead.predicate = kQueryPred;
    for (const auto& v : qvars) qhead.args.push_back(Term::variable(v));

    query_table_ = new_table(canonicalize_call(qhead, {}));
    tables_[query_table_].expanded = true;
    Cont c{query_table_, qhead, query, 0, {}};
    push_cont(std::move(c));

    StopReason stop = drive();

    SolveResult res;
    res.stop = stop;
    res.steps = steps_;
    const Table& qt = tables_[query_table_];
    size_t n = qt.answers.size();
    if (limits_.max_answers && n > limits_.max_answers)
      n = limits_.max_answers;
    for (size_t i = 0; i < n; ++i) {
      Answer ans;
      for (size_t v = 0; v < qvars.size(); ++v)
        ans.bindings.emplace_back(qvars[v], qt.answers[i].args[v]);
      std::sort(ans.bindings.begin(), ans.bindings.end(),
                [](const auto& x, const auto& y) { return x.first < y.first; });
      res.answers.push_back(std::move(ans));
    }
    first_answer_origins_.clear();
    if (!qt.answer_origins.empty())
      first_answer_origins_ = qt.answer_origins.front();
    return res;
  }

  std::vector<std::string> trace_tokens() const {
    std::vector<std::string> out;
    for (uint32_t idx : first_answer_origins_) {
      const std::string& o = ctx_.statements()[idx].origin;
      if (!o.empty() && std::find(out.begin(), out.end(), o) == out.end())
        out.push_back(o);
    }
    return out;
  }

 private:
  StopReason drive() {
    uint64_t ticks = 0;
    while (!events_.empty()) {
      if (steps_ > limits_.max_steps) return StopReason::StepBudget;
      if (deadline_ && (++ticks & 0x3ff) == 0 &&
          std::chrono::steady_clock::now() > *deadline_)
        return StopReason::Deadline;
      if (limits_.max_answers &&
          tables_[query_table_].answers.size() >= limits_.max_answers)
        return StopReason::AnswerCap;

      Event ev = events_.front();
      events_.pop_front();
      switch (ev.kind) {
        case Ev::Expand: expand(ev.a); break;
        case Ev::Resume: resume(ev.a); break;
        case Ev::Feed: feed(ev.a, ev.b, ev.c); break;
      }
    }
    return StopReason::Completed;
  }

  uint32_t new_table(Atom call) {
    tables_.push_back(Table{std::move(call), {}, {}, {}, {}, false});
    return static_cast<uint32_t>(tables_.size() - 1);
  }

  void push_cont(Cont c) {
    conts_.push_back(std::move(c));
    events_.push_back(
        Event{Ev::Resume, static_cast<uint32_t>(conts_.size() - 1), 0, 0});
  }

  // Expands a table: resolves its call against matching context statements.
  void expand(uint32_t tid) {
    Atom call = tables_[tid].call;  // copy: tables_ may reallocate below
    const Term* first =
        !call.args.empty() && call.args[0].is_ground() ? &call.args[0] : nullptr;
    ctx_.for_each_candidate(call.predicate, call.args.size(), first,
                            [&](uint32_t sidx) {
                              ++steps_;
                              const Statement& st = ctx_.statements()[sidx];
                              try_statement(tid, call, st, sidx);
                            });
  }

  void try_statement(uint32_t tid, const Atom& call, const Statement& st,
                     uint32_t sidx) {
    if (st.is_fact()) {
      Subst s;
      if (!unify_atoms(call, st.head, s)) return;
      add_answer(tid, st.head, {sidx});
      return;
    }
    uint64_t tag = ++rename_counter_;
    Atom head = rename_atom(st.head, tag);
    Subst s;
    if (!unify_atoms(call, head, s)) return;
    Cont c;
    c.table_id = tid;
    c.head = apply_atom(head, s);
    c.body.reserve(st.body.size());
    for (const auto& b : st.body)
      c.body.push_back(apply_atom(rename_atom(b, tag), s));
    c.origins = {sidx};
    push_cont(std::move(c));
  }

  void resume(uint32_t cid) {
    // Copy: conts_ may reallocate while we schedule successors.
    Cont c = conts_[cid];
    if (c.next >= c.body.size()) {
      if (!c.head.is_ground())
        throw std::logic_error("derived non-ground atom: " + c.head.text());
      add_answer(c.table_id, c.head, c.origins);
      return;
    }
    const Atom& goal = c.body[c.next];
    if (is_reserved_predicate(goal.predicate)) {
      ++steps_;
      BuiltinOutcome out = eval_builtin(goal);
      if (!out.success) return;
      Cont nc = c;
      nc.next++;
      if (out.binding) {
        Subst s;
        s.emplace(out.binding->first, out.binding->second);
        nc.head = apply_atom(nc.head, s);
        for (auto& b : nc.body) b = apply_atom(b, s);
      }
      push_cont(std::move(nc));
      return;
    }

    Atom canon = canonicalize_call(goal, {});
    std::string key = atom_key(canon);
    auto it = call_index_.find(key);
    uint32_t tid;
    bool fresh = false;
    if (it == call_index_.end()) {
      tid = new_table(std::move(canon));
      call_index_.emplace(std::move(key), tid);
      fresh = true;
    } else {
      tid = it->second;
    }
    tables_[tid].consumers.push_back(cid);
    for (uint32_t i = 0; i < tables_[tid].answers.size(); ++i)
      events_.push_back(Event{Ev::Feed, cid, tid, i});
    if (fresh) {
      tables_[tid].expanded = true;
      events_.push_back(Event{Ev::Expand, tid, 0, 0});
    }
  }

  void feed(uint32_t cid, uint32_t tid, uint32_t answer_idx) {
    ++steps_;
    const Cont& c = conts_[cid];
    const Atom& answer = tables_[tid].answers[answer_idx];
    Subst s;
    if (!unify_atoms(c.body[c.next], answer, s)) return;
    Cont nc;
    nc.table_id = c.table_id;
    nc.head = apply_atom(c.head, s);
    nc.next = c.next + 1;
    nc.body.reserve(c.body.size());
    for (const auto& b : c.body) nc.body.push_back(apply_atom(b, s));
    nc.origins = c.origins;
    merge_origins(nc.origins, tables_[tid].answer_origins[answer_idx]);
    push_cont(std::move(nc));
  }

  void add_answer(uint32_t tid, const Atom& atom,
                  std::vector<uint32_t> origins) {
    Table& t = tables_[tid];
    if (!t.answer_keys.insert(atom_key(atom)).second) return;
    t.answers.push_back(atom);
    t.answer_origins.push_back(std::move(origins));
    uint32_t idx = static_cast<uint32_t>(t.answers.size() - 1);
    for (uint32_t cid : t.consumers)
      events_.push_back(Event{Ev::Feed, cid, tid, idx});
  }

  const IndexedContext& ctx_;
  SolveLimits limits_;
  std::optional<std::chrono::steady_clock::time_point> deadline_;

  std::vector<Table> tables_;
  std::unordered_map<std::string, uint32_t> call_index_;
  std::deque<Cont> conts_;
  std::deque<Event> events_;
  uint32_t query_table_ = 0;
  uint64_t rename_counter_ = 0;
  uint64_t steps_ = 0;
  std::vector<uint32_t> first_answer_origins_;
};

}  // namespace

std::string_view stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::Completed: return "completed";
    case StopReason::AnswerCap: return "answer-cap";
    case StopReason::StepBudget: return "step-budget";
    case StopReason::Deadline: return "deadline";
  }
  return "?";
}

SolveResult solve(const IndexedContext& ctx, const std::vector<Atom>& query,
                  const SolveLimits& limits) {
  Engine e(ctx, limits);
  return e.run(query);
}

ProveResult prove_conjunction(const IndexedContext& ctx,
                              const std::vector<Atom>& query,
                              const SolveLimits& limits) {
  SolveLimits l = limits;
  l.max_answers = 1;
  Engine e(ctx, l);
  SolveResult r = e.run(query);
  ProveResult p;
  p.holds = !r.answers.empty();
  p.stop = r.stop;
  p.steps = r.steps;
  p.answers = std::move(r.answers);
  if (p.holds) p.trace = e.trace_tokens();
  return p;
}

ProveResult prove(const IndexedContext& ctx, const Atom& goal,
                  const SolveLimits& limits) {
  return prove_conjunction(ctx, {goal}, limits);
}

}  // namespace safe::logic
