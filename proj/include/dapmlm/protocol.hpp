#pragma once

// Deterministic single-timeline simulation of the multi-party flow: data
// owners upload locally perturbed data, the classifier owner uploads a
// perturbed model, a service provider bridges two clouds (C1 stores data,
// C2 serves the classifier), request users query. Every message is logged;
// the log can be audited and exported.

#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "dapmlm/dataset.hpp"
#include "dapmlm/naive_bayes.hpp"
#include "dapmlm/noise.hpp"

namespace dapmlm {

enum class Role { DataOwner, ClassifierOwner, Csp, Cloud1, Cloud2, RequestUser };

struct EntityId {
  Role role = Role::Csp;
  int index = 0;

  bool operator==(const EntityId&) const = default;
};

inline std::string to_string(const EntityId& id) {
  switch (id.role) {
    case Role::DataOwner: return "DO" + std::to_string(id.index);
    case Role::ClassifierOwner: return "CO";
    case Role::Csp: return "CSP";
    case Role::Cloud1: return "C1";
    case Role::Cloud2: return "C2";
    case Role::RequestUser: return "RU" + std::to_string(id.index);
  }
  return "?";
}

struct Ack {
  std::string what;
};
struct UploadData {
  SyntheticDataset data;
};
struct UploadModel {
  NbModel model;
};
struct DataRequest {
  int user = 0;
  std::string dataset_ref;
};
struct DataGrant {
  SyntheticDataset data;
};
struct ClassifyRequest {
  int user = 0;
  std::vector<std::vector<double>> rows;
  std::uint64_t request_id = 0;
};
struct ClassifyResponse {
  std::vector<std::string> labels;
  std::uint64_t request_id = 0;
};

using Payload = std::variant<Ack, UploadData, UploadModel, DataRequest,
                             DataGrant, ClassifyRequest, ClassifyResponse>;

inline std::string payload_kind(const Payload& p) {
  switch (p.index()) {
    case 0: return "Ack";
    case 1: return "UploadData";
    case 2: return "UploadModel";
    case 3: return "DataRequest";
    case 4: return "DataGrant";
    case 5: return "ClassifyRequest";
    case 6: return "ClassifyResponse";
  }
  return "?";
}

struct ProtocolMessage {
  std::uint64_t seq = 0;
  EntityId sender;
  EntityId receiver;
  Payload payload;
};

struct ProtocolIncident {
  std::uint64_t seq = 0;
  std::string what;
};

struct UserQuery {
  enum class Kind { Classify, Data };
  Kind kind = Kind::Classify;
  int user = 1;
  std::vector<std::vector<double>> rows;  // Classify
  std::string dataset_ref;                // Data
};

struct ProtocolConfig {
  std::vector<Dataset> owner_data;  // one entry per data owner
  std::vector<std::string> class_hint;  // label vocabulary for the CO's model
  PrivacyBudget budget{1.0};
  bool perturb_data = true;
  bool perturb_model = true;
  NoisePlacement placement = NoisePlacement::PerCell;
  double count_noise_scale = 1.0;
  std::uint64_t seed = 0;
  std::vector<UserQuery> queries;
  bool allow_data_grants = true;
  // Test hooks: skip the model path to exercise the query-before-model error;
  // override owner noise draws (used for fixed-noise reproduction runs).
  bool skip_model_upload = false;
  std::function<double(std::size_t owner_index, double scale)> data_noise_override;
};

struct SimulationTrace {
  std::vector<ProtocolMessage> log;
  std::vector<SyntheticDataset> cloud1_store;  // never holds a model
  std::optional<NbModel> cloud2_model;         // never holds training data
  std::vector<std::vector<std::string>> responses;  // per classify query
  std::vector<ProtocolIncident> incidents;
  // Simulation-side audit metadata; never part of a message.
  std::vector<Dataset> raw_inputs;
  bool data_noise_expected = false;
  bool model_noise_expected = false;
};

namespace detail {

class TraceBuilder {
 public:
  explicit TraceBuilder(SimulationTrace& trace) : trace_(trace) {}

  const ProtocolMessage& send(EntityId from, EntityId to, Payload payload) {
    trace_.log.push_back({next_seq_++, from, to, std::move(payload)});
    return trace_.log.back();
  }

 private:
  SimulationTrace& trace_;
  std::uint64_t next_seq_ = 1;
};

inline NbModel classifier_owner_model(const ProtocolConfig& config,
                                      std::size_t attribute_count) {
  std::vector<std::string> labels = config.class_hint;
  if (labels.empty())
    for (const auto& d : config.owner_data)
      for (const auto& l : d.class_list()) labels.push_back(l);
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  std::vector<ClassParams> classes;
  for (const auto& l : labels)
    classes.push_back({l, 1.0, std::vector<AttributeStats>(attribute_count, {0.0, 1.0})});
  return NbModel(std::move(classes), attribute_count, ModelTag::Raw);
}

inline std::vector<AttributeBounds> observed_bounds(
    const std::vector<std::vector<double>>& rows) {
  std::vector<AttributeBounds> bounds;
  const std::size_t d = rows.front().size();
  for (std::size_t j = 0; j < d; ++j) {
    double lo = rows.front()[j], hi = rows.front()[j];
    for (const auto& r : rows) {
      lo = std::min(lo, r[j]);
      hi = std::max(hi, r[j]);
    }
    bounds.emplace_back(lo, hi);
  }
  return bounds;
}

}  // namespace detail

inline SimulationTrace run_protocol(const ProtocolConfig& config) {
  if (config.owner_data.empty())
    throw std::invalid_argument("run_protocol: at least one data owner required");
  const std::size_t d = config.owner_data.front().attribute_count();
  for (const auto& data : config.owner_data)
    if (data.attribute_count() != d)
      throw std::invalid_argument("run_protocol: owners disagree on attribute count");

  SimulationTrace trace;
  trace.raw_inputs = config.owner_data;
  trace.data_noise_expected = config.perturb_data;
  trace.model_noise_expected = config.perturb_model && !config.skip_model_upload;
  detail::TraceBuilder out(trace);

  const NoiseSource master(config.seed);
  const EntityId csp{Role::Csp, 0}, c1{Role::Cloud1, 0}, c2{Role::Cloud2, 0};

  // Owners perturb locally and upload through the CSP into C1.
  for (std::size_t i = 0; i < config.owner_data.size(); ++i) {
    const auto& raw = config.owner_data[i];
    const std::string owner_name = "DO" + std::to_string(i + 1);
    SyntheticDataset release = [&] {
      if (!config.perturb_data) return as_unperturbed_release(raw, owner_name);
      if (config.data_noise_override) {
        return perturb_dataset_with(
            raw, config.budget,
            [&](double b) { return config.data_noise_override(i, b); },
            config.placement, owner_name);
      }
      NoiseSource src = master.split("owner:" + std::to_string(i));
      return perturb_dataset(raw, config.budget, src, config.placement, owner_name);
    }();
    const EntityId owner{Role::DataOwner, static_cast<int>(i + 1)};
    out.send(owner, csp, UploadData{release});
    out.send(csp, c1, UploadData{release});
    trace.cloud1_store.push_back(std::move(release));
  }

  // The classifier owner perturbs its model and uploads into C2; C2 then
  // refreshes the parameters on the pooled synthetic data and re-applies the
  // owner's perturbation before serving any query.
  if (!config.skip_model_upload) {
    NbModel co_model = detail::classifier_owner_model(config, d);
    if (config.perturb_model) {
      NoiseSource co_src = master.split("classifier-owner");
      const std::vector<AttributeBounds> unit_bounds(d, AttributeBounds(0.0, 1.0));
      co_model = perturb_model(co_model, unit_bounds, config.budget, co_src,
                               config.count_noise_scale);
    }
    const EntityId co{Role::ClassifierOwner, 0};
    out.send(co, csp, UploadModel{co_model});
    out.send(csp, c2, UploadModel{co_model});

    // Pooled C1 contents flow to C2 for the (transient) training call.
    std::vector<std::vector<double>> pooled_rows;
    std::vector<std::string> pooled_labels;
    for (const auto& s : trace.cloud1_store) {
      pooled_rows.insert(pooled_rows.end(), s.rows().begin(), s.rows().end());
      pooled_labels.insert(pooled_labels.end(), s.labels().begin(), s.labels().end());
    }
    SyntheticDataset pool("pool", pooled_rows, pooled_labels, "C1",
                          config.perturb_data
                              ? std::optional<double>(config.budget.epsilon())
                              : std::nullopt,
                          config.perturb_data);
    out.send(c1, c2, UploadData{std::move(pool)});

    NbModel trained = train(pooled_rows, pooled_labels);
    if (config.perturb_model) {
      NoiseSource refresh_src = master.split("model-refresh");
      const auto bounds = detail::observed_bounds(pooled_rows);
      trained = perturb_model(trained, bounds, config.budget, refresh_src,
                              config.count_noise_scale);
    }
    trace.cloud2_model = std::move(trained);
    out.send(c2, csp, Ack{"model-trained"});
  }

  // User queries, routed through the CSP.
  for (const auto& q : config.queries) {
    const EntityId user{Role::RequestUser, q.user};
    if (q.kind == UserQuery::Kind::Classify) {
      const std::uint64_t rid =
          out.send(user, csp, ClassifyRequest{q.user, q.rows, 0}).seq;
      std::get<ClassifyRequest>(trace.log.back().payload).request_id = rid;
      if (!trace.cloud2_model) {
        trace.incidents.push_back({rid, "classification requested before model upload"});
        continue;
      }
      out.send(csp, c2, ClassifyRequest{q.user, q.rows, rid});
      auto labels = predict_batch(*trace.cloud2_model, q.rows);
      out.send(c2, csp, ClassifyResponse{labels, rid});
      out.send(csp, user, ClassifyResponse{labels, rid});
      trace.responses.push_back(std::move(labels));
    } else {
      const std::uint64_t rid =
          out.send(user, csp, DataRequest{q.user, q.dataset_ref}).seq;
      if (!config.allow_data_grants) {
        trace.incidents.push_back({rid, "data sharing disabled by policy"});
        continue;
      }
      const SyntheticDataset* found = nullptr;
      for (const auto& s : trace.cloud1_store)
        if (s.owner() == q.dataset_ref) found = &s;
      if (!found) {
        trace.incidents.push_back({rid, "unknown dataset: " + q.dataset_ref});
        continue;
      }
      out.send(csp, c1, DataRequest{q.user, q.dataset_ref});
      out.send(c1, csp, DataGrant{*found});
      out.send(csp, user, DataGrant{*found});
    }
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Privacy audit over a finished trace.

struct AuditReport {
  bool passed = true;
  std::vector<std::string> violations;
};

inline AuditReport audit_trace(const SimulationTrace& trace) {
  AuditReport report;
  auto violation = [&](std::uint64_t seq, const std::string& what) {
    report.passed = false;
    report.violations.push_back("message " + std::to_string(seq) + ": " + what);
  };

  std::uint64_t last_seq = 0;
  for (const auto& m : trace.log) {
    if (m.seq <= last_seq)
      violation(m.seq, "sequence numbers not strictly increasing");
    last_seq = m.seq;

    if (m.sender.role == Role::DataOwner && m.receiver.role == Role::DataOwner)
      violation(m.seq, "direct data-owner to data-owner message");

    if (const auto* up = std::get_if<UploadData>(&m.payload)) {
      if (trace.data_noise_expected) {
        if (!up->data.perturbed())
          violation(m.seq, "unperturbed data payload in a perturbing run");
        if (m.sender.role == Role::DataOwner) {
          const auto idx = static_cast<std::size_t>(m.sender.index - 1);
          if (idx < trace.raw_inputs.size() &&
              up->data.rows() == trace.raw_inputs[idx].rows())
            violation(m.seq, "uploaded values identical to raw data of " +
                                 to_string(m.sender));
        }
      }
    } else if (const auto* up = std::get_if<UploadModel>(&m.payload)) {
      if (trace.model_noise_expected && up->model.tag() != ModelTag::Noisy)
        violation(m.seq, "raw-tagged model payload in a perturbing run");
    } else if (const auto* grant = std::get_if<DataGrant>(&m.payload)) {
      if (trace.data_noise_expected && !grant->data.perturbed())
        violation(m.seq, "unperturbed data granted to a user");
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Line-delimited trace export: "seq sender receiver kind digest".

namespace detail {

inline void digest_values(const std::vector<std::vector<double>>& rows,
                          std::uint64_t& h) {
  char buf[64];
  for (const auto& r : rows)
    for (double v : r) {
      std::snprintf(buf, sizeof(buf), "%a", v);
      h = fnv1a64(buf, h);
    }
}

inline std::uint64_t payload_digest(const Payload& payload) {
  std::uint64_t h = fnv1a64(payload_kind(payload));
  if (const auto* a = std::get_if<Ack>(&payload)) {
    h = fnv1a64(a->what, h);
  } else if (const auto* up = std::get_if<UploadData>(&payload)) {
    h = fnv1a64(up->data.owner(), h);
    digest_values(up->data.rows(), h);
    for (const auto& l : up->data.labels()) h = fnv1a64(l, h);
  } else if (const auto* um = std::get_if<UploadModel>(&payload)) {
    std::ostringstream ss;
    save_model(um->model, ss);
    h = fnv1a64(ss.str(), h);
  } else if (const auto* rq = std::get_if<DataRequest>(&payload)) {
    h = fnv1a64(rq->dataset_ref, fnv1a64_u64(static_cast<std::uint64_t>(rq->user), h));
  } else if (const auto* g = std::get_if<DataGrant>(&payload)) {
    h = fnv1a64(g->data.owner(), h);
    digest_values(g->data.rows(), h);
  } else if (const auto* cr = std::get_if<ClassifyRequest>(&payload)) {
    h = fnv1a64_u64(cr->request_id, h);
    digest_values(cr->rows, h);
  } else if (const auto* resp = std::get_if<ClassifyResponse>(&payload)) {
    h = fnv1a64_u64(resp->request_id, h);
    for (const auto& l : resp->labels) h = fnv1a64(l, h);
  }
  return h;
}

}  // namespace detail

inline void export_trace(const SimulationTrace& trace, std::ostream& out) {
  char digest[32];
  for (const auto& m : trace.log) {
    std::snprintf(digest, sizeof(digest), "%016llx",
                  static_cast<unsigned long long>(detail::payload_digest(m.payload)));
    out << m.seq << " " << to_string(m.sender) << " " << to_string(m.receiver)
        << " " << payload_kind(m.payload) << " " << digest << "\n";
  }
}

// Structural audit of an exported trace file (payloads are digests only, so
// the checks are the ones expressible over the envelope).
inline AuditReport audit_trace_file(std::istream& in) {
  AuditReport report;
  auto violation = [&](const std::string& what) {
    report.passed = false;
    report.violations.push_back(what);
  };
  static const std::vector<std::string> kinds = {
      "Ack", "UploadData", "UploadModel", "DataRequest",
      "DataGrant", "ClassifyRequest", "ClassifyResponse"};
  std::string line;
  std::uint64_t last_seq = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::uint64_t seq = 0;
    std::string sender, receiver, kind, digest;
    if (!(ls >> seq >> sender >> receiver >> kind >> digest)) {
      violation("line " + std::to_string(line_no) + ": malformed record");
      continue;
    }
    if (seq <= last_seq)
      violation("message " + std::to_string(seq) +
                ": sequence numbers not strictly increasing");
    last_seq = seq;
    if (sender.rfind("DO", 0) == 0 && receiver.rfind("DO", 0) == 0)
      violation("message " + std::to_string(seq) +
                ": direct data-owner to data-owner message");
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end())
      violation("message " + std::to_string(seq) + ": unknown payload kind " + kind);
  }
  return report;
}

}  // namespace dapmlm
