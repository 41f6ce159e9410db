#include "safe/bench/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <ostream>
#include <set>

#include "safe/logic/ipv4.hpp"
#include "safe/logic/parser.hpp"
#include "safe/logic/solver.hpp"
#include "safe/store/safestore.hpp"

namespace safe::bench {

namespace {

using apps::AppHarness;
using apps::LinkMode;
using apps::Principal;
using apps::StrongDriver;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  int64_t us() const {
    return std::chrono::duration_cast<std::chrono::microseconds>(
               std::chrono::steady_clock::now() - t0)
        .count();
  }
};

struct BenchRig {
  explicit BenchRig(const BenchOptions& o, uint64_t salt = 0)
      : options(o),
        clock(std::make_shared<cache::ManualClock>()),
        store(store::make_memory_backend(), {},
              [this] { return clock->now_ms(); }),
        counting(store),
        harness(counting, clock, o.scripts_dir, o.seed ^ salt,
                make_cache_cfg(o)) {}

  static cache::ContextServiceConfig make_cache_cfg(const BenchOptions& o) {
    cache::ContextServiceConfig cfg;
    cfg.secondary_index = o.secondary_index;
    cfg.throttle_ms = o.throttle_ms;
    cfg.jitter_min = 1.0;  // deterministic refresh scheduling
    cfg.jitter_max = 1.0;
    cfg.jitter_seed = o.seed + 1;
    cfg.closure.max_sets = 4096;
    cfg.closure.max_statements = 1 << 20;
    cfg.set_capacity = 1 << 16;
    cfg.context_capacity = 1 << 14;
    return cfg;
  }

  BenchOptions options;
  std::shared_ptr<cache::ManualClock> clock;
  store::SafeStore store;
  store::CountingStore counting;
  AppHarness harness;
};

logic::Term fake_scid(const std::string& tag, int i) {
  auto h = cert::sha256("bench-scid|" + tag + "|" + std::to_string(i));
  cert::Scid s;
  s.authority = cert::PrincipalId{h};
  for (int j = 0; j < 16; ++j) s.guid[j] = static_cast<uint8_t>(i >> (j % 4));
  return logic::Term::scid(s.text());
}

std::string pct_line(const std::string& what, std::vector<double> v) {
  if (v.empty()) return what + ": no samples";
  char buf[160];
  snprintf(buf, sizeof(buf), "%s: n=%zu p50=%.1f p95=%.1f", what.c_str(),
           v.size(), percentile(v, 50), percentile(v, 95));
  return buf;
}

}  // namespace

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  double idx = (p / 100.0) * (values.size() - 1);
  size_t lo = static_cast<size_t>(idx);
  size_t hi = std::min(lo + 1, values.size() - 1);
  double frac = idx - lo;
  return values[lo] * (1 - frac) + values[hi] * frac;
}

LinearFit fit_linear(const std::vector<double>& xs,
                     const std::vector<double>& ys) {
  LinearFit fit;
  size_t n = xs.size();
  if (n < 2) return fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  double res = 0, tot = 0;
  for (size_t i = 0; i < n; ++i) {
    double f = fit.slope * xs[i] + fit.intercept;
    res += (ys[i] - f) * (ys[i] - f);
    tot += ys[i] * ys[i];
  }
  fit.relative_residual = tot > 0 ? std::sqrt(res / tot) : 0;
  return fit;
}

ChainFixture gen_delegation_chain(AppHarness& h, StrongDriver& strong, int n,
                                  int noisy_height) {
  // One authority owns the whole nested-group hierarchy (Fig-7 shape): a
  // chain of n membership delegations plus one membership at the end.
  std::string tag = "chain" + std::to_string(n);
  auto& owner = h.make_principal(tag + "-owner");
  std::vector<cert::Scid> groups;
  for (int i = 0; i <= n; ++i) {
    if (i == 0) {
      groups.push_back(strong.create_group_space(owner));
    } else {
      groups.push_back(h.new_scid_for(owner));
      strong.include_subgroup(owner, groups[i - 1], groups[i]);
    }
  }
  auto& member = h.make_principal(tag + "-member");
  cert::Token grant = strong.grant_local_membership(owner, member, groups[n]);

  auto ctx = h.contexts().assemble(
      {grant, cert::make_token(owner.id, "group/" + groups[0].text())});
  ChainFixture fx;
  fx.pruned = ctx.context->statements();
  fx.query = logic::parse_query(owner.id.text() + ": member(" +
                                member.id.text() + ", " + groups[0].text() +
                                ")");

  fx.noisy = fx.pruned;
  if (noisy_height > 0) {
    // The distracting delegations form a binary tree hanging off the root
    // group, injected directly into the context.
    logic::Term speaker = logic::Term::principal(owner.id.text());
    int counter = 0;
    struct Node {
      logic::Term group;
      int depth;
    };
    std::deque<Node> frontier{{logic::Term::scid(groups[0].text()), 0}};
    while (!frontier.empty()) {
      Node node = frontier.front();
      frontier.pop_front();
      if (node.depth >= noisy_height) continue;
      for (int c = 0; c < 2; ++c) {
        logic::Term child_group = fake_scid(tag, counter++);
        logic::Statement deleg;
        deleg.head.speaker = speaker;
        deleg.head.predicate = "includes";
        deleg.head.args = {node.group, child_group};
        fx.noisy.push_back(std::move(deleg));
        frontier.push_back({child_group, node.depth + 1});
      }
    }
  }
  return fx;
}

namespace {

// ------------------------------------------------------- pruning scenarios

void run_pruning_groups(const BenchOptions& o, BenchResult& out) {
  BenchRig rig(o);
  StrongDriver strong(rig.harness, LinkMode::Direct);
  int request = 0;
  for (int n = o.chain_min; n <= o.chain_max; n += o.chain_step) {
    ChainFixture fx =
        gen_delegation_chain(rig.harness, strong, n,
                             n <= o.noisy_max ? n : 0);
    for (bool noisy : {false, true}) {
      if (noisy && n > o.noisy_max) continue;
      for (bool secondary : {true, false}) {
        auto ctx = logic::build_context(noisy ? fx.noisy : fx.pruned,
                                        {secondary, logic::kNoExpiry});
        Timer t;
        auto proof = logic::prove_conjunction(*ctx, fx.query);
        Row row;
        row.scenario = o.scenario;
        row.mode = std::string(noisy ? "noisy" : "pruned") + "/" +
                   (secondary ? "secondary" : "primary");
        row.param = n;
        row.request = request++;
        row.decision = proof.holds;
        row.steps = proof.steps;
        row.context_stmts = ctx->size();
        row.latency_us = t.us();
        out.rows.push_back(row);
      }
    }
  }
  for (const auto& mode :
       {"pruned/secondary", "pruned/primary", "noisy/secondary",
        "noisy/primary"}) {
    std::vector<double> xs, ys;
    for (const auto& r : out.rows)
      if (r.mode == mode) {
        xs.push_back(static_cast<double>(r.param));
        ys.push_back(static_cast<double>(r.steps));
      }
    auto fit = fit_linear(xs, ys);
    char buf[160];
    snprintf(buf, sizeof(buf),
             "%s: steps(n) slope=%.2f rel_residual=%.3f max=%.0f", mode,
             fit.slope, fit.relative_residual, ys.empty() ? 0 : ys.back());
    out.summary.push_back(buf);
  }
}

void run_pruning_names(const BenchOptions& o, BenchResult& out) {
  // Single-authority naming: one service owns a directory-object hierarchy;
  // the query walks name-entry delegations from the root directory down to
  // a leaf object (Fig-8 shape).
  BenchRig rig(o);
  StrongDriver strong(rig.harness, LinkMode::Direct);
  auto& svc = rig.harness.make_principal("naming-svc");
  auto policy = rig.harness.interp().invoke_defcon(
      rig.harness.strong(), "namingPolicy", {}, rig.harness.env_of(svc));
  logic::Term speaker = logic::Term::principal(svc.id.text());

  int request = 0;
  for (int n = o.chain_min; n <= o.chain_max; n += o.chain_step) {
    std::string tag = "nm" + std::to_string(n);
    std::vector<cert::Scid> dirs;
    std::string facts;
    for (int i = 0; i <= n; ++i) {
      dirs.push_back(rig.harness.new_scid_for(svc));
      if (i > 0)
        facts += "dirContainsDom(" + dirs[i - 1].text() + ", " +
                 dirs[i].text() + ").\n";
    }
    cert::Scid obj = rig.harness.new_scid_for(svc);
    facts += "dirContainsObj(" + dirs.back().text() + ", " + obj.text() +
             ").\n";
    cert::Token tree = rig.harness.issue_set(svc, tag + "/tree", facts,
                                             {policy.token});

    auto assembled = rig.harness.contexts().assemble({tree});
    std::vector<logic::Statement> pruned = assembled.context->statements();
    std::vector<logic::Statement> noisy = pruned;
    if (n <= o.noisy_max) {
      int counter = 0;
      struct Node {
        logic::Term dir;
        int depth;
      };
      std::deque<Node> frontier{{logic::Term::scid(dirs[0].text()), 0}};
      while (!frontier.empty()) {
        Node node = frontier.front();
        frontier.pop_front();
        if (node.depth >= n) continue;
        for (int c = 0; c < 2; ++c) {
          logic::Term child = fake_scid(tag, counter++);
          logic::Statement entry;
          entry.head.speaker = speaker;
          entry.head.predicate = "dirContainsDom";
          entry.head.args = {node.dir, child};
          noisy.push_back(std::move(entry));
          frontier.push_back({child, node.depth + 1});
        }
      }
    }
    auto query = logic::parse_query(svc.id.text() + ": under(" + obj.text() +
                                    ", " + dirs[0].text() + ")");
    for (bool noisy_mode : {false, true}) {
      if (noisy_mode && n > o.noisy_max) continue;
      for (bool secondary : {true, false}) {
        auto ctx = logic::build_context(noisy_mode ? noisy : pruned,
                                        {secondary, logic::kNoExpiry});
        Timer t;
        auto proof = logic::prove_conjunction(*ctx, query);
        Row row;
        row.scenario = o.scenario;
        row.mode = std::string(noisy_mode ? "noisy" : "pruned") + "/" +
                   (secondary ? "secondary" : "primary");
        row.param = n;
        row.request = request++;
        row.decision = proof.holds;
        row.steps = proof.steps;
        row.context_stmts = ctx->size();
        row.latency_us = t.us();
        out.rows.push_back(row);
      }
    }
  }
}

// ------------------------------------------------------------ naming-cache

void run_naming_cache(const BenchOptions& o, BenchResult& out) {
  BenchRig rig(o);
  StrongDriver strong(rig.harness, LinkMode::Direct);

  // Naming tree: interior nodes are domains, leaves are objects.
  auto& root = strong.make_domain("nc-root");
  std::vector<Principal*> frontier = {&root};
  std::vector<std::string> paths;
  std::vector<std::string> prefixes = {""};
  for (int depth = 1; depth < o.tree_height; ++depth) {
    std::vector<Principal*> next;
    std::vector<std::string> next_prefixes;
    for (size_t p = 0; p < frontier.size(); ++p) {
      for (int b = 0; b < o.tree_branching; ++b) {
        std::string comp = "c" + std::to_string(b);
        auto& child = strong.make_domain("nc-" + std::to_string(depth) + "-" +
                                         std::to_string(p) + "-" +
                                         std::to_string(b));
        strong.add_domain_entry(*frontier[p], comp, child);
        next.push_back(&child);
        next_prefixes.push_back(prefixes[p] + comp + "/");
      }
    }
    frontier = std::move(next);
    prefixes = std::move(next_prefixes);
  }
  for (size_t p = 0; p < frontier.size(); ++p) {
    for (int b = 0; b < o.tree_branching; ++b) {
      std::string comp = "c" + std::to_string(b);
      auto obj = strong.create_object(*frontier[p]);
      strong.add_object_entry(*frontier[p], comp, obj);
      paths.push_back(prefixes[p] + comp);
    }
  }

  rig.counting.reset();
  int request = 0;
  for (int pass = 1; pass <= 2; ++pass) {
    for (const auto& path : paths) {
      uint64_t before = rig.counting.fetches();
      Timer t;
      auto r = strong.resolve_name(root, path);
      Row row;
      row.scenario = o.scenario;
      row.mode = "pass" + std::to_string(pass);
      row.param = pass;
      row.request = request++;
      row.decision = r.found && r.validated;
      row.fetches = rig.counting.fetches() - before;
      row.cache_hit = row.fetches == 0;
      row.latency_us = t.us();
      out.rows.push_back(row);
    }
  }
  std::vector<double> p1, p2;
  uint64_t p2_fetches = 0;
  for (const auto& r : out.rows) {
    (r.param == 1 ? p1 : p2).push_back(static_cast<double>(r.latency_us));
    if (r.param == 2) p2_fetches += r.fetches;
  }
  out.summary.push_back(pct_line("pass1 latency_us", p1));
  out.summary.push_back(pct_line("pass2 latency_us", p2));
  out.summary.push_back("pass2 store fetches: " + std::to_string(p2_fetches));
}

// -------------------------------------------------------------- dual-index

void run_dual_index(const BenchOptions& o, BenchResult& out) {
  int request = 0;
  for (bool single : {false, true}) {
    BenchRig rig(o, single ? 0x5151 : 0);
    StrongDriver strong(rig.harness, LinkMode::Direct);
    auto& authorizer = rig.harness.make_principal("svc");
    for (int n = o.chain_min; n <= std::min(o.chain_max, 12);
         n += o.chain_step) {
      std::string tag = "di" + std::to_string(n);
      std::vector<Principal*> dirs;
      for (int i = 0; i <= n; ++i) {
        auto& d = strong.make_domain(tag + "-d" + std::to_string(i), single);
        dirs.push_back(&d);
        if (i > 0)
          strong.add_domain_entry(*dirs[i - 1], "c" + std::to_string(i), d);
      }
      auto obj = strong.create_object(*dirs.back());
      strong.add_object_entry(*dirs.back(), "leaf", obj);
      auto& gowner = rig.harness.make_principal(tag + "-gown");
      auto group = strong.create_group(gowner);
      auto& alice = rig.harness.make_principal(tag + "-alice");
      auto grant = strong.grant_membership(gowner, alice, group);
      strong.attach_acl(*dirs[0], group, gowner, "read");

      Timer t;
      auto r = strong.check_prefix_access(authorizer, alice, obj.text(),
                                          *dirs[0], "read", grant);
      Row row;
      row.scenario = o.scenario;
      row.mode = single ? "single-index" : "double-index";
      row.param = n;
      row.request = request++;
      row.decision = r.allowed;
      row.steps = r.diagnostics.prover_steps;
      row.context_stmts = r.diagnostics.statement_count;
      row.context_sets = r.diagnostics.context_members.size();
      row.refreshes = r.diagnostics.refresh_attempts;
      row.latency_us = t.us();
      out.rows.push_back(row);
    }
  }
}

// ----------------------------------------------------------------- routing

struct Topology {
  std::vector<Principal*> ases;
  std::vector<std::vector<int>> adj;
  std::vector<int> leaves;
};

Topology build_as_topology(apps::RoutingDriver& routing,
                           const BenchOptions& o, Principal& anchor) {
  Topology topo;
  struct Node {
    Principal* as;
    std::string prefix;
    int depth;
  };
  auto& first = routing.make_as("as-0");
  topo.ases.push_back(&first);
  routing.allocate(anchor, "10.0.0.0/8", first);
  std::deque<Node> frontier{{topo.ases[0], "10.0.0.0/8", 0}};
  int counter = 1;
  while (!frontier.empty()) {
    Node node = frontier.front();
    frontier.pop_front();
    if (node.depth >= o.as_tree_depth) continue;
    auto base = *logic::parse_ipv4_prefix(node.prefix);
    for (int b = 0; b < o.as_tree_branching; ++b) {
      auto& as = routing.make_as("as-" + std::to_string(counter++));
      topo.ases.push_back(&as);
      logic::Ipv4Prefix child;
      child.length = static_cast<uint8_t>(base.length + 3);
      child.address =
          base.address | (static_cast<uint32_t>(b) << (32 - child.length));
      routing.allocate(*node.as, child.text(), as);
      frontier.push_back({&as, child.text(), node.depth + 1});
    }
  }
  // Random connectivity over all ASes: a ring plus a few chords.
  std::mt19937_64 rng(o.seed * 31 + 7);
  size_t n = topo.ases.size();
  topo.adj.resize(n);
  for (size_t i = 0; i < n; ++i) {
    size_t j = (i + 1) % n;
    topo.adj[i].push_back(static_cast<int>(j));
    topo.adj[j].push_back(static_cast<int>(i));
  }
  for (size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 2; ++c) {
      size_t j = rng() % n;
      if (j == i) continue;
      topo.adj[i].push_back(static_cast<int>(j));
      topo.adj[j].push_back(static_cast<int>(i));
    }
  }
  for (size_t i = 0; i < n; ++i) topo.leaves.push_back(static_cast<int>(i));
  return topo;
}

std::vector<int> shortest_path(const Topology& topo, int from, int to) {
  std::vector<int> prev(topo.ases.size(), -1);
  std::deque<int> q{from};
  prev[from] = from;
  while (!q.empty()) {
    int cur = q.front();
    q.pop_front();
    if (cur == to) break;
    for (int nb : topo.adj[cur]) {
      if (prev[nb] != -1) continue;
      prev[nb] = cur;
      q.push_back(nb);
    }
  }
  std::vector<int> path;
  if (prev[to] == -1) return path;
  for (int cur = to; cur != from; cur = prev[cur]) path.push_back(cur);
  path.push_back(from);
  std::reverse(path.begin(), path.end());
  return path;
}

void run_routing(const BenchOptions& o, BenchResult& out) {
  BenchRig rig(o);
  apps::RoutingDriver routing(rig.harness);
  auto& anchor = routing.make_as("anchor");
  Topology topo = build_as_topology(routing, o, anchor);
  auto& authorizer = rig.harness.make_principal("validator");
  std::mt19937_64 rng(o.seed * 17 + 3);

  // The prefix an AS owns is recoverable from its allocation credential;
  // advertise each origin's own prefix along a shortest path.
  auto prefix_of = [&](Principal& as) {
    auto f = rig.counting.fetch(routing.ownership_credential(as));
    auto cert = cert::decode_certificate(f.bytes);
    for (const auto& st : cert.set.statements)
      if (st.head.predicate == "alloc") return st.head.args[0].text();
    return std::string("10.0.0.0/8");
  };

  int request = 0;
  auto run_model = [&](const std::string& model) {
    int fixed_origin = static_cast<int>(rng() % topo.ases.size());
    int fixed_receiver = static_cast<int>(rng() % topo.ases.size());
    int made = 0;
    while (made < o.route_count) {
      int from, to;
      if (model == "same-origin") {
        from = fixed_origin;
        to = static_cast<int>(rng() % topo.ases.size());
      } else if (model == "same-receiver") {
        from = static_cast<int>(rng() % topo.ases.size());
        to = fixed_receiver;
      } else {
        from = static_cast<int>(rng() % topo.ases.size());
        to = static_cast<int>(rng() % topo.ases.size());
      }
      if (from == to) continue;
      auto path = shortest_path(topo, from, to);
      if (path.size() < 2) continue;
      ++made;
      std::string prefix = prefix_of(*topo.ases[from]);
      cert::Scid adv =
          routing.advertise_origin(*topo.ases[from], prefix, anchor);
      for (size_t i = 1; i < path.size(); ++i)
        adv = routing.advertise_hop(*topo.ases[path[i]], prefix, adv);

      uint64_t before = rig.counting.fetches();
      Timer t;
      auto r = routing.validate(authorizer, adv);
      Row row;
      row.scenario = o.scenario;
      row.mode = model;
      row.param = static_cast<int64_t>(path.size());
      row.request = request++;
      row.decision = r.allowed;
      row.steps = r.diagnostics.prover_steps;
      row.context_sets = r.diagnostics.context_members.size();
      row.context_stmts = r.diagnostics.statement_count;
      row.fetches = rig.counting.fetches() - before;
      row.latency_us = t.us();
      out.rows.push_back(row);
    }
  };
  run_model("same-origin");
  run_model("random");
  run_model("same-receiver");

  for (const auto& model : {"same-origin", "random", "same-receiver"}) {
    std::vector<double> lat, fetches;
    for (const auto& r : out.rows)
      if (r.mode == model) {
        lat.push_back(static_cast<double>(r.latency_us));
        fetches.push_back(static_cast<double>(r.fetches));
      }
    out.summary.push_back(pct_line(std::string(model) + " latency_us", lat));
    out.summary.push_back(pct_line(std::string(model) + " fetches", fetches));
  }
}

// ------------------------------------------------------------- attestation

void run_attestation(const BenchOptions& o, BenchResult& out) {
  BenchRig rig(o);
  apps::AttestDriver attest(rig.harness);
  auto& cloud = rig.harness.make_principal("cloud");
  auto& certifier = rig.harness.make_principal("certifier");
  auto& owner = rig.harness.make_principal("owner");
  auto& authorizer = rig.harness.make_principal("svc");

  std::vector<std::string> acl;
  for (int i = 0; i < o.acl_size; ++i) acl.push_back("a" + std::to_string(i));
  auto obj = attest.make_object(owner, cloud, certifier, acl);

  int request = 0;
  for (int k = o.prop_min; k <= o.prop_max; k += o.prop_step) {
    std::string image = "img" + std::to_string(k);
    std::vector<std::string> props;
    for (int i = 0; i + 1 < k; ++i)
      props.push_back("p" + std::to_string(k) + "x" + std::to_string(i));
    props.push_back("a17");  // single overlap, placed last
    attest.endorse_image(certifier, image, props);
    auto& client = rig.harness.make_principal("client" + std::to_string(k));
    auto bearer = attest.attest(cloud, client, image, certifier);

    Timer t;
    auto r = attest.check_access(authorizer, client, obj, bearer);
    Row row;
    row.scenario = o.scenario;
    row.mode = "sweep";
    row.param = k;
    row.request = request++;
    row.decision = r.allowed;
    row.steps = r.diagnostics.prover_steps;
    row.context_sets = r.diagnostics.context_members.size();
    row.context_stmts = r.diagnostics.statement_count;
    row.latency_us = t.us();
    out.rows.push_back(row);
  }
  std::vector<double> xs, ys;
  for (const auto& r : out.rows) {
    xs.push_back(static_cast<double>(r.param));
    ys.push_back(static_cast<double>(r.steps));
  }
  auto fit = fit_linear(xs, ys);
  char buf[160];
  snprintf(buf, sizeof(buf),
           "steps(props): slope=%.3f intercept=%.1f rel_residual=%.3f",
           fit.slope, fit.intercept, fit.relative_residual);
  out.summary.push_back(buf);
}

// ----------------------------------------------------- linking-granularity

struct LinkPlan {
  struct ObjectSpec {
    int owner;
    std::vector<int> chain;  // delegation chain principals (after the owner)
  };
  std::vector<ObjectSpec> objects;
  struct Request {
    int subject;
    int object;
    std::string priv;
  };
  std::vector<Request> requests;
};

LinkPlan make_link_plan(const BenchOptions& o) {
  LinkPlan plan;
  std::mt19937_64 rng(o.seed * 101 + 13);
  for (int i = 0; i < o.objects; ++i) {
    LinkPlan::ObjectSpec spec;
    spec.owner = static_cast<int>(rng() % o.principals);
    int len = 1 + static_cast<int>(rng() % o.chain_len);
    std::set<int> used = {spec.owner};
    for (int j = 0; j < len; ++j) {
      int p = static_cast<int>(rng() % o.principals);
      if (used.count(p)) continue;
      used.insert(p);
      spec.chain.push_back(p);
    }
    plan.objects.push_back(std::move(spec));
  }
  for (int r = 0; r < o.requests; ++r) {
    LinkPlan::Request req;
    req.object = static_cast<int>(rng() % plan.objects.size());
    const auto& chain = plan.objects[req.object].chain;
    if (!chain.empty() && rng() % 4 != 0) {
      req.subject = chain[rng() % chain.size()];
    } else {
      req.subject = static_cast<int>(rng() % o.principals);
    }
    req.priv = "read";
    plan.requests.push_back(req);
  }
  return plan;
}

void run_linking_granularity(const BenchOptions& o, BenchResult& out) {
  LinkPlan plan = make_link_plan(o);
  std::map<std::string, std::vector<Row>> rows_by_mode;

  for (LinkMode mode : {LinkMode::Direct, LinkMode::Coarse}) {
    BenchRig rig(o);
    StrongDriver strong(rig.harness, mode);
    auto& authorizer = rig.harness.make_principal("svc");
    std::vector<Principal*> people;
    for (int i = 0; i < o.principals; ++i)
      people.push_back(&rig.harness.make_principal("p" + std::to_string(i)));
    std::vector<cert::Scid> objects;
    for (const auto& spec : plan.objects) {
      auto obj = strong.create_object(*people[spec.owner]);
      int prev = spec.owner;
      for (int next : spec.chain) {
        strong.delegate_capability(*people[prev], *people[next], obj, "read",
                                   true);
        prev = next;
      }
      objects.push_back(obj);
    }
    std::string mode_name = mode == LinkMode::Direct ? "direct" : "coarse";
    int request = 0;
    for (const auto& req : plan.requests) {
      Timer t;
      auto r = strong.access(authorizer, *people[req.subject],
                             objects[req.object], req.priv);
      Row row;
      row.scenario = o.scenario;
      row.mode = mode_name;
      row.param = req.object;
      row.request = request++;
      row.decision = r.allowed;
      row.steps = r.diagnostics.prover_steps;
      row.context_sets = r.diagnostics.context_members.size();
      row.context_stmts = r.diagnostics.statement_count;
      row.refreshes = r.diagnostics.refresh_attempts;
      row.latency_us = t.us();
      rows_by_mode[mode_name].push_back(row);
    }
  }
  for (auto& [mode, rows] : rows_by_mode)
    for (auto& r : rows) out.rows.push_back(r);

  const auto& direct = rows_by_mode["direct"];
  const auto& coarse = rows_by_mode["coarse"];
  size_t matching = 0, smaller_or_equal = 0;
  std::vector<double> dstmts, cstmts;
  for (size_t i = 0; i < direct.size(); ++i) {
    if (direct[i].decision == coarse[i].decision) ++matching;
    if (direct[i].context_stmts <= coarse[i].context_stmts)
      ++smaller_or_equal;
    dstmts.push_back(static_cast<double>(direct[i].context_stmts));
    cstmts.push_back(static_cast<double>(coarse[i].context_stmts));
  }
  char buf[200];
  snprintf(buf, sizeof(buf),
           "decisions match: %zu/%zu; direct<=coarse: %zu/%zu; "
           "p95 stmts direct=%.0f coarse=%.0f",
           matching, direct.size(), smaller_or_equal, direct.size(),
           percentile(dstmts, 95), percentile(cstmts, 95));
  out.summary.push_back(buf);
}

// -------------------------------------------------------------- update-mix

void run_update_mix(const BenchOptions& o, BenchResult& out) {
  BenchRig rig(o);
  StrongDriver strong(rig.harness, LinkMode::Direct);
  auto& authorizer = rig.harness.make_principal("svc");
  std::vector<Principal*> people;
  for (int i = 0; i < o.principals; ++i)
    people.push_back(&rig.harness.make_principal("p" + std::to_string(i)));

  std::mt19937_64 rng(o.seed * 7 + 5);
  std::vector<cert::Scid> objects;
  std::vector<int> owner_of;
  std::set<std::pair<int, size_t>> has_read, has_write;
  for (int i = 0; i < o.objects; ++i) {
    int owner = static_cast<int>(rng() % people.size());
    auto obj = strong.create_object(*people[owner]);
    objects.push_back(obj);
    owner_of.push_back(owner);
    // A few read delegations to warm with.
    for (int d = 0; d < 3; ++d) {
      int subject = static_cast<int>(rng() % people.size());
      if (subject == owner) continue;
      strong.delegate_capability(*people[owner], *people[subject], obj,
                                 "read", true);
      has_read.insert({subject, objects.size() - 1});
    }
  }
  // Warm the guard with read queries.
  for (const auto& [subject, oi] : has_read)
    strong.access(authorizer, *people[subject], objects[oi], "read");

  std::vector<std::pair<int, size_t>> warm(has_read.begin(), has_read.end());
  int request = 0;
  for (int round = 0; round < o.requests; ++round) {
    rig.clock->advance(40);  // deterministic time flow past throttles
    bool update = static_cast<int>(rng() % 100) < o.update_pct;
    if (update && !warm.empty()) {
      auto [subject, oi] = warm[rng() % warm.size()];
      if (has_write.count({subject, oi})) update = false;
      if (update) {
        // Delegate-then-query: the new write capability lands in the
        // subject's credential set; the warm context is stale until the
        // guard's refresh pulls it.
        strong.delegate_capability(*people[owner_of[oi]], *people[subject],
                                   objects[oi], "write", false);
        has_write.insert({subject, oi});
        Timer t;
        auto r = strong.access(authorizer, *people[subject], objects[oi],
                               "write");
        Row row;
        row.scenario = o.scenario;
        row.mode = "update-then-query";
        row.param = round;
        row.request = request++;
        row.decision = r.allowed;
        row.steps = r.diagnostics.prover_steps;
        row.refreshes = r.diagnostics.refresh_attempts;
        row.context_stmts = r.diagnostics.statement_count;
        row.latency_us = t.us();
        out.rows.push_back(row);
        continue;
      }
    }
    auto [subject, oi] = warm[rng() % warm.size()];
    Timer t;
    auto r = strong.access(authorizer, *people[subject], objects[oi], "read");
    Row row;
    row.scenario = o.scenario;
    row.mode = "query";
    row.param = round;
    row.request = request++;
    row.decision = r.allowed;
    row.steps = r.diagnostics.prover_steps;
    row.refreshes = r.diagnostics.refresh_attempts;
    row.context_stmts = r.diagnostics.statement_count;
    row.latency_us = t.us();
    out.rows.push_back(row);
  }

  size_t updates = 0, refreshed_allows = 0, query_refreshes = 0;
  for (const auto& r : out.rows) {
    if (r.mode == "update-then-query") {
      ++updates;
      if (r.decision && r.refreshes == 1) ++refreshed_allows;
    } else {
      query_refreshes += r.refreshes;
    }
  }
  out.summary.push_back("updates: " + std::to_string(updates) +
                        ", allowed after exactly one refresh: " +
                        std::to_string(refreshed_allows));
  out.summary.push_back("plain queries triggering refresh: " +
                        std::to_string(query_refreshes));
}

}  // namespace

std::vector<std::string> scenario_names() {
  return {"pruning-groups", "pruning-names", "naming-cache",
          "dual-index",     "routing",       "attestation",
          "linking-granularity", "update-mix"};
}

BenchResult run_experiment(const BenchOptions& options) {
  BenchResult out;
  const std::string& s = options.scenario;
  if (s == "pruning-groups") {
    run_pruning_groups(options, out);
  } else if (s == "pruning-names") {
    run_pruning_names(options, out);
  } else if (s == "naming-cache") {
    run_naming_cache(options, out);
  } else if (s == "dual-index") {
    run_dual_index(options, out);
  } else if (s == "routing") {
    run_routing(options, out);
  } else if (s == "attestation") {
    run_attestation(options, out);
  } else if (s == "linking-granularity") {
    run_linking_granularity(options, out);
  } else if (s == "update-mix") {
    run_update_mix(options, out);
  } else {
    throw std::invalid_argument("unknown scenario: " + s);
  }
  return out;
}

void write_csv(const BenchResult& result, std::ostream& out) {
  out << "scenario,mode,param,request,decision,steps,context_sets,"
         "context_stmts,fetches,cache_hit,refreshes,latency_us\n";
  for (const auto& r : result.rows) {
    out << r.scenario << ',' << r.mode << ',' << r.param << ',' << r.request
        << ',' << (r.decision ? 1 : 0) << ',' << r.steps << ','
        << r.context_sets << ',' << r.context_stmts << ',' << r.fetches << ','
        << (r.cache_hit ? 1 : 0) << ',' << r.refreshes << ',' << r.latency_us
        << '\n';
  }
}

}  // namespace safe::bench
