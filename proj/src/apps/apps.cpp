#include "safe/apps/apps.hpp"

#include <fstream>
#include <sstream>

#include "safe/logic/parser.hpp"

namespace safe::apps {

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw std::runtime_error("cannot read script: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::array<uint8_t, 32> seed32(std::mt19937_64& rng) {
  std::array<uint8_t, 32> s{};
  for (size_t i = 0; i < 32; i += 8) {
    uint64_t v = rng();
    for (size_t j = 0; j < 8; ++j) s[i + j] = (v >> (8 * j)) & 0xff;
  }
  return s;
}

}  // namespace

AppHarness::AppHarness(store::StoreClient& store,
                       std::shared_ptr<cache::Clock> clock,
                       const std::string& scripts_dir, uint64_t seed,
                       cache::ContextServiceConfig cache_cfg,
                       slang::InterpreterConfig interp_cfg)
    : store_(store),
      clock_(clock),
      contexts_(store, clock, cache_cfg),
      interp_(store, contexts_, clock, cert::seeded_guid_source(seed * 2 + 1),
              interp_cfg),
      strong_(slang::load_script(slurp(scripts_dir + "/strong.slang"))),
      routing_(slang::load_script(slurp(scripts_dir + "/routing.slang"))),
      attestation_(
          slang::load_script(slurp(scripts_dir + "/attestation.slang"))),
      rng_(seed) {}

Principal& AppHarness::make_principal(const std::string& name) {
  auto it = principals_.find(name);
  if (it != principals_.end()) return *it->second;
  auto p = std::make_unique<Principal>();
  auto seed = seed32(rng_);
  p->key = cert::keypair_from_seed(seed);
  p->id = cert::principal_id(p->key);
  p->name = name;
  Principal& ref = *p;
  principals_[name] = std::move(p);
  interp_.invoke_defcon(strong_, "idSet", {}, env_of(ref));
  interp_.invoke_defcon(strong_, "subjectSet", {}, env_of(ref));
  return ref;
}

Principal& AppHarness::principal(const std::string& name) {
  auto it = principals_.find(name);
  if (it == principals_.end())
    throw std::runtime_error("unknown principal: " + name);
  return *it->second;
}

slang::Env AppHarness::env_of(const Principal& p) {
  slang::Env env;
  env.key = &p.key;
  return env;
}

cert::Scid AppHarness::new_scid_for(const Principal& p) {
  auto guids = cert::seeded_guid_source(rng_());
  return cert::new_scid(p.id, guids);
}

void AppHarness::append_link(const Principal& p, const std::string& label,
                             const cert::Token& link) {
  cert::Token tok = cert::make_token(p.id, label);
  std::vector<logic::Statement> statements;
  std::vector<cert::Token> links;
  auto existing = store_.fetch(tok);
  if (existing.ok) {
    cert::Certificate c = cert::decode_certificate(existing.bytes);
    statements = c.set.statements;
    links = c.set.links;
  }
  if (std::find(links.begin(), links.end(), link) != links.end()) return;
  links.push_back(link);
  int64_t now = clock_->now_ms();
  auto cert = cert::build_and_sign(label, std::move(statements),
                                   std::move(links), now, now + ttl_ms(),
                                   p.key);
  auto out = store_.post(cert::encode_certificate(cert), tok);
  if (!out.ok)
    throw std::runtime_error("append_link post failed: " + out.message);
}

void AppHarness::append_statements(const Principal& p, const std::string& label,
                                   const std::string& logic_text) {
  cert::Token tok = cert::make_token(p.id, label);
  std::vector<logic::Statement> statements;
  std::vector<cert::Token> links;
  auto existing = store_.fetch(tok);
  if (existing.ok) {
    cert::Certificate c = cert::decode_certificate(existing.bytes);
    statements = c.set.statements;
    links = c.set.links;
  }
  for (auto& st : logic::parse_program(logic_text))
    statements.push_back(std::move(st));
  int64_t now = clock_->now_ms();
  auto cert = cert::build_and_sign(label, std::move(statements),
                                   std::move(links), now, now + ttl_ms(),
                                   p.key);
  auto out = store_.post(cert::encode_certificate(cert), tok);
  if (!out.ok)
    throw std::runtime_error("append_statements post failed: " + out.message);
}

cert::Token AppHarness::issue_set(const Principal& p, const std::string& label,
                                  const std::string& logic_text,
                                  const std::vector<cert::Token>& links) {
  int64_t now = clock_->now_ms();
  auto cert = cert::build_and_sign(label, logic::parse_program(logic_text),
                                   links, now, now + ttl_ms(), p.key);
  auto out = store_.post(cert::encode_certificate(cert), cert.token());
  if (!out.ok)
    throw std::runtime_error("issue_set post failed: " + out.message);
  return out.token;
}

// ------------------------------------------------------------------ STRONG

void StrongDriver::record_support(const Principal& p, const std::string& key,
                                  const cert::Token& tok) {
  support_[p.name + "|" + key] = tok;
}

cert::Token StrongDriver::support_for(const Principal& p,
                                      const std::string& key) const {
  auto it = support_.find(p.name + "|" + key);
  if (it == support_.end())
    throw std::runtime_error("no supporting credential for " + p.name + " " +
                             key);
  return it->second;
}

cert::Scid StrongDriver::create_object(Principal& owner) {
  cert::Scid scid = h_.new_scid_for(owner);
  auto r = h_.interp().invoke_defcon(h_.strong(), "newObjectSet",
                                     {scid.text()}, h_.env_of(owner));
  record_support(owner, "cap:" + scid.text(), r.token);
  if (mode_ == LinkMode::Coarse) h_.append_link(owner, "subject", r.token);
  return scid;
}

cert::Token StrongDriver::delegate_capability(Principal& delegator,
                                              Principal& subject,
                                              const cert::Scid& object,
                                              const std::string& priv,
                                              bool delegatable, bool force) {
  // The delegator's own guard gates issuance: it must hold the capability
  // with the delegatable bit.
  if (!force) {
    auto gate = h_.interp().invoke_defguard(h_.strong(), "mayDelegate",
                                            {object.text(), priv},
                                            h_.env_of(delegator));
    if (!gate.allowed)
      throw std::runtime_error("delegator lacks a delegatable capability for " +
                               object.text());
  }

  slang::DefConResult issued;
  if (mode_ == LinkMode::Direct) {
    cert::Token support = support_for(delegator, "cap:" + object.text());
    issued = h_.interp().invoke_defcon(
        h_.strong(), "delegateCapabilityDirect",
        {subject.id.text(), object.text(), priv,
         delegatable ? "true" : "false", support.text()},
        h_.env_of(delegator));
  } else {
    issued = h_.interp().invoke_defcon(
        h_.strong(), "delegateCapabilityCoarse",
        {subject.id.text(), object.text(), priv,
         delegatable ? "true" : "false"},
        h_.env_of(delegator));
  }

  // Receiver side (token passing is the application's job): collect the
  // credential per the explicit delegation rule.
  if (mode_ == LinkMode::Direct) {
    std::string cred_label = "cred/" + object.text();
    h_.append_link(subject, cred_label, issued.token);
    record_support(subject, "cap:" + object.text(),
                   cert::make_token(subject.id, cred_label));
  } else {
    h_.append_link(subject, "subject", issued.token);
  }
  return issued.token;
}

cert::Token StrongDriver::bearer_for(const Principal& subject,
                                     const cert::Scid& object) {
  return mode_ == LinkMode::Direct
             ? cert::make_token(subject.id, "cred/" + object.text())
             : cert::make_token(subject.id, "subject");
}

slang::GuardResult StrongDriver::access(const Principal& authorizer,
                                        const Principal& subject,
                                        const cert::Scid& object,
                                        const std::string& priv) {
  slang::Env env = h_.env_of(authorizer);
  env.bind("BearerRef", bearer_for(subject, object).text());
  return h_.interp().invoke_defguard(
      h_.strong(), "accessCapability",
      {subject.id.text(), object.text(), priv}, std::move(env));
}

cert::Scid StrongDriver::create_group(Principal& owner) {
  cert::Scid group = h_.new_scid_for(owner);
  auto r = h_.interp().invoke_defcon(h_.strong(), "newGroupSet",
                                     {group.text()}, h_.env_of(owner));
  record_support(owner, "group:" + group.text(), r.token);
  return group;
}

cert::Token StrongDriver::grant_membership(Principal& group_owner,
                                           Principal& member,
                                           const cert::Scid& group) {
  cert::Token support = support_for(group_owner, "group:" + group.text());
  auto r = h_.interp().invoke_defcon(
      h_.strong(), "grantMembership",
      {member.id.text(), group.text(), support.text()},
      h_.env_of(group_owner));
  record_support(member, "member:" + group.text(), r.token);
  return r.token;
}

cert::Token StrongDriver::delegate_subgroup(Principal& parent_owner,
                                            const cert::Scid& parent_group,
                                            Principal& sub_owner,
                                            const cert::Scid& subgroup) {
  cert::Token support =
      support_for(parent_owner, "group:" + parent_group.text());
  auto r = h_.interp().invoke_defcon(
      h_.strong(), "delegateSubgroupMembership",
      {parent_group.text(), subgroup.text(), sub_owner.id.text(),
       support.text()},
      h_.env_of(parent_owner));
  // Grants inside the subgroup now chain through this delegation.
  record_support(sub_owner, "group:" + subgroup.text(), r.token);
  return r.token;
}

slang::GuardResult StrongDriver::query_membership(const Principal& authorizer,
                                                  const Principal& member,
                                                  const cert::Scid& group,
                                                  const cert::Token& bearer) {
  slang::Env env = h_.env_of(authorizer);
  env.bind("BearerRef", bearer.text());
  return h_.interp().invoke_defguard(h_.strong(), "queryMembership",
                                     {member.id.text(), group.text()},
                                     std::move(env));
}

cert::Scid StrongDriver::create_group_space(Principal& owner) {
  cert::Scid group = h_.new_scid_for(owner);
  auto r = h_.interp().invoke_defcon(h_.strong(), "newGroupSpace",
                                     {group.text()}, h_.env_of(owner));
  record_support(owner, "lgroup:" + group.text(), r.token);
  return group;
}

cert::Token StrongDriver::include_subgroup(Principal& owner,
                                           const cert::Scid& group,
                                           const cert::Scid& subgroup) {
  cert::Token support = support_for(owner, "lgroup:" + group.text());
  auto r = h_.interp().invoke_defcon(
      h_.strong(), "includeSubgroup",
      {group.text(), subgroup.text(), support.text()}, h_.env_of(owner));
  record_support(owner, "lgroup:" + subgroup.text(), r.token);
  return r.token;
}

cert::Token StrongDriver::grant_local_membership(Principal& owner,
                                                 Principal& member,
                                                 const cert::Scid& group) {
  cert::Token support = support_for(owner, "lgroup:" + group.text());
  auto r = h_.interp().invoke_defcon(
      h_.strong(), "grantLocalMembership",
      {member.id.text(), group.text(), support.text()}, h_.env_of(owner));
  record_support(member, "member:" + group.text(), r.token);
  return r.token;
}

Principal& StrongDriver::make_domain(const std::string& name,
                                     bool single_index) {
  Principal& p = h_.make_principal(name);
  h_.interp().invoke_defcon(h_.strong(),
                            single_index ? "dirSetSingle" : "dirSet", {},
                            h_.env_of(p));
  return p;
}

cert::Token StrongDriver::add_domain_entry(Principal& parent,
                                           const std::string& component,
                                           const Principal& child) {
  auto r = h_.interp().invoke_defcon(h_.strong(), "nameDomain",
                                     {component, child.id.text()},
                                     h_.env_of(parent));
  h_.append_link(parent, "dir", r.token);
  return r.token;
}

cert::Token StrongDriver::add_object_entry(Principal& parent,
                                           const std::string& component,
                                           const cert::Scid& object) {
  auto r = h_.interp().invoke_defcon(h_.strong(), "nameObject",
                                     {component, object.text()},
                                     h_.env_of(parent));
  h_.append_link(parent, "dir", r.token);
  return r.token;
}

cert::Token StrongDriver::attach_acl(Principal& dir_owner,
                                     const cert::Scid& group,
                                     const Principal& group_owner,
                                     const std::string& priv) {
  auto r = h_.interp().invoke_defcon(
      h_.strong(), "aclEntry",
      {group.text(), group_owner.id.text(), priv}, h_.env_of(dir_owner));
  h_.append_link(dir_owner, "dir", r.token);
  return r.token;
}

ResolveResult StrongDriver::resolve_name(const Principal& root,
                                         const std::string& path) {
  ResolveResult res;
  std::vector<std::string> components;
  std::string cur;
  for (char c : path) {
    if (c == '/') {
      components.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) components.push_back(cur);

  cert::PrincipalId domain = root.id;
  struct Hop {
    std::string domain;     // principal text of the naming context
    std::string component;
    std::string target;
    std::string kind;
  };
  std::vector<Hop> hops;
  std::vector<const cert::ValidatedSet*> hop_sets;
  std::vector<cert::ValidatedSet> owned;

  auto& sets = h_.contexts().sets();
  for (size_t i = 0; i < components.size(); ++i) {
    cert::Token tok = cert::make_token(domain, "name/" + components[i]);
    auto outcome = sets.get(tok);
    if (!outcome.set) {
      res.failed_hop = static_cast<int>(i);
      return res;
    }
    owned.push_back(*outcome.set);
    res.hop_tokens.push_back(tok);

    auto ctx = logic::build_context(owned.back().set.statements);
    logic::Atom q;
    q.speaker = logic::Term::principal(domain.text());
    q.predicate = "nameEntry";
    q.args = {logic::Term::string(components[i]), logic::Term::variable("T"),
              logic::Term::variable("K")};
    auto proof = logic::prove(*ctx, q);
    if (!proof.holds) {
      res.failed_hop = static_cast<int>(i);
      return res;
    }
    std::string target = proof.answers[0].lookup("T")->text();
    std::string kind = proof.answers[0].lookup("K")->text();
    hops.push_back({domain.text(), components[i], target, kind});

    if (kind == "domain") {
      auto next = cert::PrincipalId::parse(target);
      if (!next) {
        res.failed_hop = static_cast<int>(i);
        return res;
      }
      if (i + 1 == components.size()) {
        res.found = true;
        res.target = target;
        res.kind = kind;
      }
      domain = *next;
    } else {
      if (i + 1 != components.size()) {
        res.failed_hop = static_cast<int>(i);  // object mid-path
        return res;
      }
      res.found = true;
      res.target = target;
      res.kind = kind;
    }
  }
  if (!res.found) return res;

  // Certified evaluation: re-validate the whole chain with one query over
  // the union of the fetched name sets.
  std::vector<logic::Statement> statements;
  for (const auto& v : owned)
    for (const auto& st : v.set.statements) statements.push_back(st);
  auto ctx = logic::build_context(std::move(statements));
  std::vector<logic::Atom> conj;
  for (const auto& hop : hops) {
    logic::Atom a;
    a.speaker = logic::Term::principal(hop.domain);
    a.predicate = "nameEntry";
    a.args = {logic::Term::string(hop.component),
              logic::Term::classify_symbol(hop.target),
              logic::Term::string(hop.kind)};
    conj.push_back(std::move(a));
  }
  res.validated = logic::prove_conjunction(*ctx, conj).holds;
  return res;
}

slang::GuardResult StrongDriver::check_prefix_access(
    const Principal& authorizer, const Principal& subject,
    const std::string& object_scid, const Principal& dir_owner,
    const std::string& priv, const cert::Token& bearer) {
  slang::Env env = h_.env_of(authorizer);
  env.bind("BearerRef", bearer.text());
  return h_.interp().invoke_defguard(
      h_.strong(), "checkPrefixAccess",
      {subject.id.text(), object_scid, dir_owner.id.text(), priv},
      std::move(env));
}

// ----------------------------------------------------------------- Routing

Principal& RoutingDriver::make_as(const std::string& name) {
  Principal& p = h_.make_principal(name);
  auto r = h_.interp().invoke_defcon(h_.routing(), "routingPolicy", {},
                                     h_.env_of(p));
  if (!ownership_.count(p.name)) ownership_[p.name] = r.token;
  return p;
}

const cert::Token& RoutingDriver::ownership_credential(
    const Principal& p) const {
  auto it = ownership_.find(p.name);
  if (it == ownership_.end())
    throw std::runtime_error("AS has no allocation credential: " + p.name);
  return it->second;
}

cert::Token RoutingDriver::allocate(Principal& from, const std::string& prefix,
                                    Principal& to) {
  auto r = h_.interp().invoke_defcon(
      h_.routing(), "allocatePrefix",
      {prefix, to.id.text(), ownership_credential(from).text()},
      h_.env_of(from));
  ownership_[to.name] = r.token;
  return r.token;
}

cert::Scid RoutingDriver::advertise_origin(Principal& as,
                                           const std::string& prefix,
                                           const Principal& anchor) {
  cert::Scid adv = h_.new_scid_for(as);
  h_.interp().invoke_defcon(
      h_.routing(), "originAdvertisement",
      {adv.text(), prefix, anchor.id.text(),
       ownership_credential(as).text()},
      h_.env_of(as));
  adv_speaker_[adv.text()] = as.name;
  return adv;
}

cert::Scid RoutingDriver::advertise_hop(Principal& as,
                                        const std::string& prefix,
                                        const cert::Scid& pred_adv) {
  auto it = adv_speaker_.find(pred_adv.text());
  if (it == adv_speaker_.end())
    throw std::runtime_error("unknown predecessor advertisement");
  Principal& pred = h_.principal(it->second);
  cert::Scid adv = h_.new_scid_for(as);
  h_.interp().invoke_defcon(
      h_.routing(), "hopAdvertisement",
      {adv.text(), prefix, pred_adv.text(), pred.id.text()}, h_.env_of(as));
  adv_speaker_[adv.text()] = as.name;
  return adv;
}

cert::Scid RoutingDriver::advertise_hop_broken_pred(Principal& as,
                                                    const std::string& prefix,
                                                    const cert::Scid& pred_adv) {
  auto it = adv_speaker_.find(pred_adv.text());
  if (it == adv_speaker_.end())
    throw std::runtime_error("unknown predecessor advertisement");
  Principal& pred = h_.principal(it->second);
  // Same shape, but the predecessor reference is a never-advertised id:
  // the support link dangles and the chain cannot validate.
  cert::Scid ghost = h_.new_scid_for(pred);
  cert::Scid adv = h_.new_scid_for(as);
  h_.interp().invoke_defcon(
      h_.routing(), "hopAdvertisement",
      {adv.text(), prefix, ghost.text(), pred.id.text()}, h_.env_of(as));
  adv_speaker_[adv.text()] = as.name;
  return adv;
}

cert::Scid RoutingDriver::advertise_origin_unowned(Principal& as,
                                                   const std::string& prefix,
                                                   const Principal& anchor) {
  cert::Scid adv = h_.new_scid_for(as);
  h_.interp().invoke_defcon(
      h_.routing(), "originAdvertisement",
      {adv.text(), prefix, anchor.id.text(),
       ownership_credential(as).text()},
      h_.env_of(as));
  adv_speaker_[adv.text()] = as.name;
  return adv;
}

slang::GuardResult RoutingDriver::validate(const Principal& authorizer,
                                           const cert::Scid& adv) {
  return h_.interp().invoke_defguard(h_.routing(), "validateRoute",
                                     {adv.text()}, h_.env_of(authorizer));
}

// ------------------------------------------------------------- Attestation

cert::Token AttestDriver::endorse_image(
    Principal& endorser, const std::string& image,
    const std::vector<std::string>& properties) {
  std::string logic;
  for (const auto& p : properties)
    logic += "hasProperty(" + image + ", " + p + ").\n";
  return h_.issue_set(endorser, "imageprops/" + image, logic, {});
}

cert::Token AttestDriver::attest(Principal& attester, const Principal& client,
                                 const std::string& image,
                                 const Principal& endorser) {
  auto r = h_.interp().invoke_defcon(
      h_.attestation(), "attestClient",
      {client.id.text(), image, endorser.id.text()}, h_.env_of(attester));
  return r.token;
}

cert::Scid AttestDriver::make_object(Principal& owner,
                                     const Principal& attester,
                                     const Principal& endorser,
                                     const std::vector<std::string>& acl) {
  cert::Scid scid = h_.new_scid_for(owner);
  h_.interp().invoke_defcon(
      h_.attestation(), "objectAclPolicy",
      {scid.text(), attester.id.text(), endorser.id.text()},
      h_.env_of(owner));
  std::string logic;
  for (const auto& p : acl)
    logic += "aclProp(" + p + ", " + scid.text() + ").\n";
  if (!logic.empty())
    h_.append_statements(owner, "objacl/" + scid.text(), logic);
  return scid;
}

slang::GuardResult AttestDriver::check_access(const Principal& authorizer,
                                              const Principal& client,
                                              const cert::Scid& object,
                                              const cert::Token& bearer) {
  slang::Env env = h_.env_of(authorizer);
  env.bind("BearerRef", bearer.text());
  return h_.interp().invoke_defguard(h_.attestation(), "checkAttestedAccess",
                                     {client.id.text(), object.text()},
                                     std::move(env));
}

}  // namespace safe::apps
