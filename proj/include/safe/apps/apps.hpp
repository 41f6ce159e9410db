#pragma once

#include <map>
#include <random>

#include "safe/slang/interpreter.hpp"

namespace safe::apps {

struct Principal {
  cert::KeyPair key;
  cert::PrincipalId id;
  std::string name;  // harness-local nickname for fixtures/logs
};

enum class LinkMode : uint8_t { Direct, Coarse };

// Shared plumbing for the application packages: one store, one cache stack,
// one interpreter, a deterministic principal/guid factory, and the loaded
// script packages.
class AppHarness {
 public:
  AppHarness(store::StoreClient& store, std::shared_ptr<cache::Clock> clock,
             const std::string& scripts_dir, uint64_t seed = 1,
             cache::ContextServiceConfig cache_cfg = {},
             slang::InterpreterConfig interp_cfg = {});

  Principal& make_principal(const std::string& name);
  Principal& principal(const std::string& name);

  slang::Env env_of(const Principal& p);
  cert::Scid new_scid_for(const Principal& p);

  // Reissues the principal's set `label` with an added link / added
  // statements (creating the set when absent). This is the explicit
  // delegation rule's "collect received credentials" maintenance step and
  // the issuer-side reissue path.
  void append_link(const Principal& p, const std::string& label,
                   const cert::Token& link);
  void append_statements(const Principal& p, const std::string& label,
                         const std::string& logic_text);

  // Builds and posts a set with driver-supplied statements (used where the
  // statement count is data-dependent, e.g. property lists and ACLs).
  cert::Token issue_set(const Principal& p, const std::string& label,
                        const std::string& logic_text,
                        const std::vector<cert::Token>& links);

  store::StoreClient& store() { return store_; }
  cache::ContextService& contexts() { return contexts_; }
  slang::Interpreter& interp() { return interp_; }
  std::shared_ptr<cache::Clock> clock() { return clock_; }
  const slang::ScriptModule& strong() const { return strong_; }
  const slang::ScriptModule& routing() const { return routing_; }
  const slang::ScriptModule& attestation() const { return attestation_; }
  std::mt19937_64& rng() { return rng_; }
  int64_t ttl_ms() const { return interp_.config().default_ttl_ms; }

 private:
  store::StoreClient& store_;
  std::shared_ptr<cache::Clock> clock_;
  cache::ContextService contexts_;
  slang::Interpreter interp_;
  slang::ScriptModule strong_, routing_, attestation_;
  std::mt19937_64 rng_;
  std::map<std::string, std::unique_ptr<Principal>> principals_;
};

// ------------------------------------------------------------------ STRONG

struct ResolveResult {
  bool found = false;
  int failed_hop = -1;          // component index of the first miss
  std::string target;           // scid or principalID text
  std::string kind;             // "object" or "domain"
  bool validated = false;       // end-to-end certified evaluation
  std::vector<cert::Token> hop_tokens;
};

class StrongDriver {
 public:
  StrongDriver(AppHarness& h, LinkMode mode) : h_(h), mode_(mode) {}

  LinkMode mode() const { return mode_; }

  // Capabilities.
  cert::Scid create_object(Principal& owner);
  // `force` skips the delegator's local gate (used to build adversarial
  // fixtures; the guard must still deny at query time).
  cert::Token delegate_capability(Principal& delegator, Principal& subject,
                                  const cert::Scid& object,
                                  const std::string& priv, bool delegatable,
                                  bool force = false);
  slang::GuardResult access(const Principal& authorizer,
                            const Principal& subject, const cert::Scid& object,
                            const std::string& priv);
  cert::Token bearer_for(const Principal& subject, const cert::Scid& object);

  // Groups.
  cert::Scid create_group(Principal& owner);
  cert::Token grant_membership(Principal& group_owner, Principal& member,
                               const cert::Scid& group);
  cert::Token delegate_subgroup(Principal& parent_owner,
                                const cert::Scid& parent_group,
                                Principal& sub_owner,
                                const cert::Scid& subgroup);
  slang::GuardResult query_membership(const Principal& authorizer,
                                      const Principal& member,
                                      const cert::Scid& group,
                                      const cert::Token& bearer);

  // Single-authority nested groups (one namespace, one rule copy).
  cert::Scid create_group_space(Principal& owner);
  cert::Token include_subgroup(Principal& owner, const cert::Scid& group,
                               const cert::Scid& subgroup);
  cert::Token grant_local_membership(Principal& owner, Principal& member,
                                     const cert::Scid& group);

  // Naming. Directories are principals; single_index picks the policy-rule
  // variant for the Fig-10 style comparison.
  Principal& make_domain(const std::string& name, bool single_index = false);
  cert::Token add_domain_entry(Principal& parent, const std::string& component,
                               const Principal& child);
  cert::Token add_object_entry(Principal& parent, const std::string& component,
                               const cert::Scid& object);
  cert::Token attach_acl(Principal& dir_owner, const cert::Scid& group,
                         const Principal& group_owner, const std::string& priv);
  ResolveResult resolve_name(const Principal& root, const std::string& path);
  slang::GuardResult check_prefix_access(const Principal& authorizer,
                                         const Principal& subject,
                                         const std::string& object_scid,
                                         const Principal& dir_owner,
                                         const std::string& priv,
                                         const cert::Token& bearer);

  // Support-set bookkeeping: the credential that backs a principal's
  // authority for an object/group (object root set or received delegation).
  cert::Token support_for(const Principal& p, const std::string& key) const;

 private:
  void record_support(const Principal& p, const std::string& key,
                      const cert::Token& tok);

  AppHarness& h_;
  LinkMode mode_;
  std::map<std::string, cert::Token> support_;  // principal|key -> credential
};

// ----------------------------------------------------------------- Routing

class RoutingDriver {
 public:
  explicit RoutingDriver(AppHarness& h) : h_(h) {}

  Principal& make_as(const std::string& name);  // posts its routing policy
  cert::Token allocate(Principal& from, const std::string& prefix,
                       Principal& to);
  cert::Scid advertise_origin(Principal& as, const std::string& prefix,
                              const Principal& anchor);
  cert::Scid advertise_hop(Principal& as, const std::string& prefix,
                           const cert::Scid& pred_adv);
  slang::GuardResult validate(const Principal& authorizer,
                              const cert::Scid& adv);

  // Corruptions for the denial checks.
  cert::Scid advertise_hop_broken_pred(Principal& as, const std::string& prefix,
                                       const cert::Scid& pred_adv);
  cert::Scid advertise_origin_unowned(Principal& as, const std::string& prefix,
                                      const Principal& anchor);

  const cert::Token& ownership_credential(const Principal& p) const;

 private:
  AppHarness& h_;
  std::map<std::string, cert::Token> ownership_;    // AS -> alloc credential
  std::map<std::string, std::string> adv_speaker_;  // adv scid -> advertiser
};

// ------------------------------------------------------------- Attestation

class AttestDriver {
 public:
  explicit AttestDriver(AppHarness& h) : h_(h) {}

  cert::Token endorse_image(Principal& endorser, const std::string& image,
                            const std::vector<std::string>& properties);
  cert::Token attest(Principal& attester, const Principal& client,
                     const std::string& image, const Principal& endorser);
  cert::Scid make_object(Principal& owner, const Principal& attester,
                         const Principal& endorser,
                         const std::vector<std::string>& acl_properties);
  slang::GuardResult check_access(const Principal& authorizer,
                                  const Principal& client,
                                  const cert::Scid& object,
                                  const cert::Token& bearer);

 private:
  AppHarness& h_;
};

}  // namespace safe::apps
