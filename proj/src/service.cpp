#include "census/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <thread>
#include <unordered_map>

#include "census/lca.hpp"
#include "census/matchers.hpp"
#include "census/pipeline.hpp"
#include "census/state.hpp"
#include "census/stats.hpp"

namespace census {

using nlohmann::json;
namespace fs = std::filesystem;

struct CensusService::DatasetEntry {
  std::string name;
  Dataset dataset;
  GroundTruth truth;
  RunConfig defaults;
  std::unordered_map<std::string, const Annotation*> by_id;
};

namespace {

struct Snapshot {
  std::string status = "filtering";
  std::string detail;
  std::uint64_t version = 0;
  std::shared_ptr<const FunnelResult> funnel;
  std::optional<ReviewRequest> pending;
  std::vector<ReviewDecision> log;
  std::map<std::string, std::size_t> log_index;  // request id -> position in log
  ClusterAssignment assignment;
  std::size_t clusters = 0;
  std::size_t algorithmic = 0;
  std::size_t human = 0;
};

struct Lease {
  std::string request_id;
  std::string lease_id;
  ServiceClock::time_point expires;
};

bool quiescent_status(const std::string& s) {
  return s == "awaiting_reviews" || s == "converged" || s == "suspended" || s == "failed";
}

HttpReply error_reply(int status, const std::string& message, const std::string& field = {}) {
  HttpReply r;
  r.status = status;
  r.body["error"] = message;
  if (!field.empty()) r.body["field"] = field;
  return r;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < path.size()) {
    auto j = path.find('/', i);
    if (j == std::string::npos) j = path.size();
    if (j > i) out.push_back(path.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

}  // namespace

struct RunSlot {
  std::string id;
  std::string dataset;
  std::string mode;
  RunConfig cfg;
  ojson meta;
  std::mutex m;
  std::condition_variable cv;
  std::shared_ptr<const Snapshot> snap = std::make_shared<Snapshot>();
  std::deque<std::pair<std::string, Decision>> queue;
  std::optional<Lease> lease;
  std::uint64_t leases_issued = 0;
  bool stop = false;
  bool hold = false;  // created without autostart, or waiting for resume
  std::thread worker;
};

namespace {

void put_status(HttpReply& r, const Snapshot& s) {
  if (r.body.is_null() && r.status != 204) r.body = ojson::object();
  if (r.status != 204) {
    r.body["status"] = s.status;
    r.body["state_version"] = s.version;
  }
  r.headers["X-Run-Status"] = s.status;
  r.headers["X-State-Version"] = std::to_string(s.version);
}

ojson counters(const Snapshot& s) {
  ojson c;
  c["clusters"] = s.clusters;
  c["algorithmic_reviews"] = s.algorithmic;
  c["human_reviews"] = s.human;
  c["total_reviews"] = s.algorithmic + s.human;
  c["automation_rate"] = automation_rate(s.algorithmic, s.human);
  c["automation_rate_display"] = format_rate(automation_rate(s.algorithmic, s.human));
  return c;
}

ojson annotation_card(const Annotation& a) {
  ojson c;
  c["annotation_id"] = a.annotation_id;
  c["kind"] = a.crop_uri ? "image" : "metadata";
  c["crop_uri"] = a.crop_uri ? ojson(*a.crop_uri) : ojson(nullptr);
  c["camera_id"] = a.camera_id;
  c["timestamp"] = format_iso8601_utc(a.timestamp);
  c["ca_score"] = a.ca_score;
  c["viewpoint"] = to_string(a.viewpoint);
  c["species"] = to_string(a.species);
  return c;
}

class Worker {
 public:
  Worker(std::shared_ptr<RunSlot> slot, std::shared_ptr<const CensusService::DatasetEntry> data,
         std::optional<fs::path> dir, std::optional<json> restored)
      : slot_(std::move(slot)), data_(std::move(data)), dir_(std::move(dir)), restored_(std::move(restored)) {}

  void operator()() {
    try {
      main();
    } catch (const std::exception& e) {
      publish(nullptr, "failed", e.what());
    }
  }

 private:
  void main() {
    const RunConfig& cfg = slot_->cfg;
    publish(nullptr, "filtering");
    funnel_ = std::make_shared<FunnelResult>(run_funnel(data_->dataset, cfg.filter, cfg.lca.exec));
    std::vector<std::string> ids = funnel_->report.final_ids;
    for (const auto& id : ids)
      if (!data_->truth.count(id)) throw std::runtime_error("annotation " + id + " has no ground truth");
    SimOracleModel model(data_->truth, cfg.oracle);
    SimRanker ranker(model);
    SimVerifier verifier(model);
    SimHuman human(model);
    SimulatedHumanChannel sim_channel(human);
    DeferredChannel deferred;
    ReviewChannel& channel = slot_->mode == "sim" ? static_cast<ReviewChannel&>(sim_channel) : deferred;

    std::optional<ReviewLogFile> logfile;
    if (dir_) {
      fs::create_directories(*dir_);
      logfile.emplace(*dir_ / "reviews.jsonl");
    }
    std::optional<LcaEngine> engine;
    if (restored_) {
      engine.emplace(LcaEngine::from_json(*restored_));
      std::vector<std::string> sorted = ids;
      std::sort(sorted.begin(), sorted.end());
      if (engine->graph().ids() != sorted) throw std::runtime_error("persisted run does not match its dataset");
    } else {
      engine.emplace(ids, cfg.lca);
      publish(&*engine, "scoring");
      engine->init_graph(ranker);
    }
    auto persist = [&] {
      if (!dir_) return;
      save_run_state(*engine, *dir_ / "run.json");
      logfile->sync(engine->review_log());
    };
    persist();

    for (;;) {
      {
        std::unique_lock lk(slot_->m);
        if (slot_->hold && !slot_->stop) {
          lk.unlock();
          publish(&*engine, "suspended", "not_started");
          lk.lock();
          slot_->cv.wait(lk, [&] { return !slot_->hold || slot_->stop; });
        }
        if (slot_->stop) {
          lk.unlock();
          persist();
          publish(&*engine, "suspended", "shutdown");
          return;
        }
      }
      if (engine->pending()) {
        persist();
        publish(&*engine, "awaiting_reviews");
        std::unique_lock lk(slot_->m);
        slot_->cv.wait(lk, [&] { return !slot_->queue.empty() || slot_->stop; });
        if (slot_->stop) continue;
        auto [rid, decision] = slot_->queue.front();
        slot_->queue.pop_front();
        lk.unlock();
        if (engine->pending() && engine->pending()->request_id == rid) engine->answer(rid, decision);
        persist();
        publish(&*engine, "scoring");
        continue;
      }
      RunStatus st = engine->run(verifier, channel, 64);
      if (st == RunStatus::converged) {
        persist();
        publish(&*engine, "converged");
        return;
      }
      if (st == RunStatus::iteration_limit) {
        persist();
        publish(&*engine, "suspended", "iteration_limit");
        return;
      }
      if (st == RunStatus::stopped) {
        persist();
        publish(&*engine, "scoring");
      }
    }
  }

  void publish(const LcaEngine* engine, std::string status, std::string detail = {}) {
    auto s = std::make_shared<Snapshot>();
    s->status = std::move(status);
    s->detail = std::move(detail);
    s->funnel = funnel_;
    if (engine) {
      s->pending = engine->pending();
      s->log = engine->review_log();
      for (std::size_t i = 0; i < s->log.size(); ++i) {
        s->log_index[s->log[i].request_id] = i;
        (is_human(s->log[i].source) ? s->human : s->algorithmic)++;
      }
      s->assignment = engine->assignment();
      s->clusters = engine->clustering().cluster_count();
    } else if (auto prev = current()) {
      s->pending = prev->pending;
      s->log = prev->log;
      s->log_index = prev->log_index;
      s->assignment = prev->assignment;
      s->clusters = prev->clusters;
      s->human = prev->human;
      s->algorithmic = prev->algorithmic;
    }
    std::lock_guard lk(slot_->m);
    s->version = slot_->snap->version + 1;
    slot_->snap = std::move(s);
    slot_->cv.notify_all();
  }

  std::shared_ptr<const Snapshot> current() {
    std::lock_guard lk(slot_->m);
    return slot_->snap;
  }

  std::shared_ptr<RunSlot> slot_;
  std::shared_ptr<const CensusService::DatasetEntry> data_;
  std::optional<fs::path> dir_;
  std::optional<json> restored_;
  std::shared_ptr<FunnelResult> funnel_;
};

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

struct CensusService::ServerHolder {
  httplib::Server server;
};

CensusService::CensusService(ServiceOptions opts) : opts_(std::move(opts)) {}

CensusService::~CensusService() {
  stop();
  shutdown();
}

void CensusService::register_dataset(const std::string& name, Dataset d, GroundTruth truth, RunConfig defaults) {
  auto e = std::make_shared<DatasetEntry>();
  e->name = name;
  e->dataset = std::move(d);
  e->truth = std::move(truth);
  e->defaults = std::move(defaults);
  for (const auto& a : e->dataset.annotations) e->by_id.emplace(a.annotation_id, &a);
  std::lock_guard lk(mu_);
  datasets_[name] = std::move(e);
}

std::shared_ptr<RunSlot> CensusService::find_run(const std::string& run_id) {
  std::lock_guard lk(mu_);
  auto it = runs_.find(run_id);
  return it == runs_.end() ? nullptr : it->second;
}

std::shared_ptr<RunSlot> CensusService::start_run(const std::string& run_id, const std::string& dataset,
                                                  const std::string& mode, const RunConfig& cfg, const ojson& meta,
                                                  bool restore) {
  std::shared_ptr<const DatasetEntry> data = datasets_.at(dataset);
  auto slot = std::make_shared<RunSlot>();
  slot->id = run_id;
  slot->dataset = dataset;
  slot->mode = mode;
  slot->cfg = cfg;
  slot->meta = meta;
  slot->hold = meta.value("autostart", true) == false;
  std::optional<fs::path> dir;
  std::optional<json> restored;
  if (opts_.db) {
    dir = *opts_.db / "runs" / run_id;
    if (!restore) {
      fs::create_directories(*dir);
      write_snapshot(*dir / "meta.json", meta);
    } else if (fs::exists(*dir / "run.json")) {
      restored = read_snapshot(*dir / "run.json", "lca_run");
      slot->hold = false;
    }
  }
  slot->worker = std::thread(Worker(slot, data, dir, restored));
  runs_[run_id] = slot;
  return slot;
}

std::size_t CensusService::restore_runs() {
  if (!opts_.db || !fs::exists(*opts_.db / "runs")) return 0;
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(*opts_.db / "runs"))
    if (e.is_directory() && fs::exists(e.path() / "meta.json")) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  std::lock_guard lk(mu_);
  std::size_t n = 0;
  for (const auto& d : dirs) {
    json meta = read_snapshot(d / "meta.json", "service_run");
    const std::string run_id = meta.at("run_id").get<std::string>();
    const std::string dataset = meta.at("dataset").get<std::string>();
    if (runs_.count(run_id) || !datasets_.count(dataset)) continue;
    RunConfig cfg;
    apply_config_json(cfg, meta.at("config"));
    start_run(run_id, dataset, meta.at("mode").get<std::string>(), cfg, ojson(meta), true);
    if (meta.contains("idempotency_key") && meta["idempotency_key"].is_string())
      idempotency_[meta["idempotency_key"].get<std::string>()] = run_id;
    unsigned long num = 0;
    if (std::sscanf(run_id.c_str(), "run-%lu", &num) == 1) next_run_ = std::max<std::size_t>(next_run_, num + 1);
    ++n;
  }
  return n;
}

void CensusService::shutdown() {
  std::vector<std::shared_ptr<RunSlot>> slots;
  {
    std::lock_guard lk(mu_);
    for (auto& [_, s] : runs_) slots.push_back(s);
  }
  for (auto& s : slots) {
    {
      std::lock_guard lk(s->m);
      s->stop = true;
      s->cv.notify_all();
    }
    if (s->worker.joinable()) s->worker.join();
  }
}

bool CensusService::wait_quiescent(const std::string& run_id, std::chrono::milliseconds timeout) {
  auto slot = find_run(run_id);
  if (!slot) return false;
  std::unique_lock lk(slot->m);
  return slot->cv.wait_for(lk, timeout, [&] { return slot->queue.empty() && quiescent_status(slot->snap->status); });
}

HttpReply CensusService::handle(const std::string& method, const std::string& path, const std::string& body,
                                const std::map<std::string, std::string>& headers) {
  try {
    auto parts = split_path(path);
    if (parts.size() < 2 || parts[0] != "api" || parts[1] != "runs") return error_reply(404, "no such endpoint");
    if (parts.size() == 2 && method == "POST") return create_run(body, headers);
    if (parts.size() < 3) return error_reply(404, "no such endpoint");
    const std::string& run = parts[2];
    if (parts.size() == 3 && method == "GET") return get_run(run);
    if (parts.size() == 4 && parts[3] == "resume" && method == "POST") return resume_run(run);
    if (parts.size() == 4 && parts[3] == "clusters" && method == "GET") return list_clusters(run);
    if (parts.size() == 5 && parts[3] == "clusters" && method == "GET") return cluster_detail(run, parts[4]);
    if (parts.size() == 5 && parts[3] == "reviews" && parts[4] == "next" && method == "GET") return next_review(run);
    if (parts.size() == 5 && parts[3] == "reviews" && parts[4] == "log" && method == "GET") return review_log(run);
    if (parts.size() == 5 && parts[3] == "reviews" && method == "POST") return post_review(run, parts[4], body);
    return error_reply(404, "no such endpoint");
  } catch (const std::exception& e) {
    return error_reply(500, e.what());
  }
}

HttpReply CensusService::create_run(const std::string& body, const std::map<std::string, std::string>& headers) {
  json req = json::object();
  if (!body.empty()) {
    try {
      req = json::parse(body);
    } catch (const json::parse_error& e) {
      return error_reply(400, std::string("malformed JSON: ") + e.what());
    }
  }
  if (!req.is_object()) return error_reply(400, "request body must be a JSON object");
  std::optional<std::string> key;
  for (const auto& [k, v] : headers)
    if (lower(k) == "idempotency-key") key = v;
  if (!key && req.contains("idempotency_key") && req["idempotency_key"].is_string())
    key = req["idempotency_key"].get<std::string>();

  std::lock_guard lk(mu_);
  if (key) {
    if (auto it = idempotency_.find(*key); it != idempotency_.end()) {
      auto slot = runs_.at(it->second);
      HttpReply r;
      r.body["run_id"] = it->second;
      std::lock_guard sl(slot->m);
      put_status(r, *slot->snap);
      return r;
    }
  }
  const std::string dataset = req.value("dataset", std::string("default"));
  auto dit = datasets_.find(dataset);
  if (dit == datasets_.end()) return error_reply(404, "unknown dataset " + dataset, "dataset");
  const std::string mode = req.value("mode", std::string("interactive"));
  if (mode != "sim" && mode != "interactive") return error_reply(400, "mode must be sim or interactive", "mode");
  RunConfig cfg = dit->second->defaults;
  try {
    if (req.contains("config")) apply_config_json(cfg, req["config"]);
    cfg.validate();
  } catch (const ConfigError& e) {
    return error_reply(400, e.what(), e.field());
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "run-%04zu", next_run_++);
  const std::string run_id = buf;
  ojson meta;
  meta["format_version"] = kStateFormatVersion;
  meta["kind"] = "service_run";
  meta["run_id"] = run_id;
  meta["dataset"] = dataset;
  meta["mode"] = mode;
  meta["autostart"] = req.value("autostart", true);
  meta["idempotency_key"] = key ? ojson(*key) : ojson(nullptr);
  meta["config"] = run_config_to_json(cfg);
  auto slot = start_run(run_id, dataset, mode, cfg, meta, false);
  if (key) idempotency_[*key] = run_id;
  HttpReply r;
  r.status = 201;
  r.body["run_id"] = run_id;
  std::lock_guard sl(slot->m);
  put_status(r, *slot->snap);
  return r;
}

HttpReply CensusService::get_run(const std::string& run_id) {
  auto slot = find_run(run_id);
  if (!slot) return error_reply(404, "unknown run " + run_id, "run_id");
  std::shared_ptr<const Snapshot> s;
  {
    std::lock_guard lk(slot->m);
    s = slot->snap;
  }
  HttpReply r;
  r.body["run_id"] = run_id;
  r.body["dataset"] = slot->dataset;
  r.body["mode"] = slot->mode;
  r.body["detail"] = s->detail;
  r.body["counters"] = counters(*s);
  r.body["pending_reviews"] = s->pending ? 1 : 0;
  if (s->funnel) {
    ojson stages = ojson::array();
    for (const auto& st : s->funnel->report.stages)
      stages.push_back({{"stage", st.stage}, {"in", st.input}, {"out", st.output}});
    r.body["funnel"] = std::move(stages);
  }
  put_status(r, *s);
  return r;
}

HttpReply CensusService::resume_run(const std::string& run_id) {
  auto slot = find_run(run_id);
  if (!slot) return error_reply(404, "unknown run " + run_id, "run_id");
  std::lock_guard lk(slot->m);
  slot->hold = false;
  slot->cv.notify_all();
  HttpReply r;
  r.body["run_id"] = run_id;
  put_status(r, *slot->snap);
  return r;
}

HttpReply CensusService::next_review(const std::string& run_id) {
  auto slot = find_run(run_id);
  if (!slot) return error_reply(404, "unknown run " + run_id, "run_id");
  std::shared_ptr<const DatasetEntry> data;
  {
    std::lock_guard lk(mu_);
    data = datasets_.at(slot->dataset);
  }
  std::lock_guard lk(slot->m);
  const Snapshot& s = *slot->snap;
  HttpReply r;
  r.status = 204;
  const auto now = opts_.now();
  const bool queued = s.pending && std::any_of(slot->queue.begin(), slot->queue.end(),
                                               [&](const auto& q) { return q.first == s.pending->request_id; });
  const bool leased = slot->lease && s.pending && slot->lease->request_id == s.pending->request_id &&
                      slot->lease->expires > now;
  if (s.status == "awaiting_reviews" && s.pending && !queued && !leased) {
    const ReviewRequest& p = *s.pending;
    slot->lease = Lease{p.request_id, "lease-" + std::to_string(++slot->leases_issued), now + opts_.lease_ttl};
    r.status = 200;
    r.body["request_id"] = p.request_id;
    r.body["pair"] = {p.a, p.b};
    r.body["attempt"] = p.attempt;
    r.body["margin"] = p.margin;
    ojson cards = ojson::array();
    for (const auto& id : {p.a, p.b}) {
      auto it = data->by_id.find(id);
      cards.push_back(it == data->by_id.end() ? ojson{{"annotation_id", id}, {"kind", "metadata"}}
                                              : annotation_card(*it->second));
    }
    r.body["annotations"] = std::move(cards);
    r.body["lease_id"] = slot->lease->lease_id;
    r.body["lease_ttl_s"] = opts_.lease_ttl.count();
    r.body["counters"] = counters(s);
  }
  put_status(r, s);
  return r;
}

HttpReply CensusService::post_review(const std::string& run_id, const std::string& request_id,
                                     const std::string& body) {
  auto slot = find_run(run_id);
  if (!slot) return error_reply(404, "unknown run " + run_id, "run_id");
  json req;
  try {
    req = json::parse(body);
  } catch (const json::parse_error&) {
    return error_reply(400, "body must be a JSON object with a decision", "decision");
  }
  if (!req.is_object() || !req.contains("decision") || !req["decision"].is_string())
    return error_reply(400, "decision must be one of same, different, incomparable", "decision");
  auto decision = decision_from_string(req["decision"].get<std::string>());
  if (!decision) return error_reply(400, "decision must be one of same, different, incomparable", "decision");

  std::unique_lock lk(slot->m);
  auto settled = [&](const Snapshot& s) -> std::optional<HttpReply> {
    auto it = s.log_index.find(request_id);
    if (it == s.log_index.end()) return std::nullopt;
    const ReviewDecision& rec = s.log[it->second];
    HttpReply r = rec.decision == *decision
                      ? HttpReply{}
                      : error_reply(409, "request " + request_id + " was already decided as " +
                                             std::string(to_string(rec.decision)));
    r.body["request_id"] = request_id;
    r.body["recorded_decision"] = to_string(rec.decision);
    r.body["review_count"] = s.log.size();
    put_status(r, s);
    return r;
  };
  if (auto r = settled(*slot->snap)) return *r;
  for (const auto& [rid, d] : slot->queue) {
    if (rid != request_id) continue;
    if (d != *decision) {
      HttpReply r = error_reply(409, "request " + request_id + " already has a different decision queued");
      r.body["recorded_decision"] = to_string(d);
      put_status(r, *slot->snap);
      return r;
    }
    break;
  }
  const bool queued = std::any_of(slot->queue.begin(), slot->queue.end(),
                                  [&](const auto& q) { return q.first == request_id; });
  if (!queued) {
    const auto& pending = slot->snap->pending;
    if (!pending || pending->request_id != request_id) {
      HttpReply r = error_reply(404, "unknown or expired request " + request_id, "request_id");
      put_status(r, *slot->snap);
      return r;
    }
    if (req.contains("lease_id") && req["lease_id"].is_string() && slot->lease &&
        slot->lease->request_id == request_id && slot->lease->expires > opts_.now() &&
        slot->lease->lease_id != req["lease_id"].get<std::string>()) {
      HttpReply r = error_reply(409, "request " + request_id + " is leased by another reviewer");
      put_status(r, *slot->snap);
      return r;
    }
    slot->queue.emplace_back(request_id, *decision);
    slot->lease.reset();
    slot->cv.notify_all();
  }
  const bool done = slot->cv.wait_for(lk, opts_.decision_wait, [&] {
    return slot->snap->log_index.count(request_id) || slot->snap->status == "failed" || slot->stop;
  });
  if (auto r = settled(*slot->snap)) return *r;
  HttpReply r;
  r.status = done ? 503 : 202;
  r.body["request_id"] = request_id;
  if (done) r.body["error"] = "run stopped before the decision was consumed";
  put_status(r, *slot->snap);
  return r;
}

HttpReply CensusService::review_log(const std::string& run_id) {
  auto slot = find_run(run_id);
  if (!slot) return error_reply(404, "unknown run " + run_id, "run_id");
  std::shared_ptr<const Snapshot> s;
  {
    std::lock_guard lk(slot->m);
    s = slot->snap;
  }
  HttpReply r;
  ojson entries = ojson::array();
  for (const auto& e : s->log) entries.push_back(review_log_entry(e));
  r.body["reviews"] = std::move(entries);
  put_status(r, *s);
  return r;
}

namespace {

struct ClusterView {
  std::vector<std::string> members;
  std::set<std::string> encounters;
  std::set<std::string> cameras;
  EpochSeconds first = 0;
  EpochSeconds last = 0;
};

std::map<std::string, ClusterView> cluster_views(const Snapshot& s,
                                                 const std::unordered_map<std::string, const Annotation*>& by_id) {
  std::unordered_map<std::string, std::string> enc_of;
  if (s.funnel)
    for (const auto& e : s.funnel->encounters)
      for (const auto& m : e.member_ids) enc_of.emplace(m, e.encounter_id);
  std::map<std::string, ClusterView> out;
  for (const auto& [ann, cid] : s.assignment) {
    ClusterView& v = out[cid];
    v.members.push_back(ann);
    if (auto it = enc_of.find(ann); it != enc_of.end()) v.encounters.insert(it->second);
    if (auto it = by_id.find(ann); it != by_id.end()) {
      const Annotation& a = *it->second;
      v.cameras.insert(a.camera_id);
      if (v.members.size() == 1 || a.timestamp < v.first) v.first = a.timestamp;
      if (v.members.size() == 1 || a.timestamp > v.last) v.last = a.timestamp;
    }
  }
  return out;
}

ojson view_json(const std::string& cid, const ClusterView& v) {
  ojson j;
  j["cluster_id"] = cid;
  j["size"] = v.members.size();
  j["members"] = v.members;
  j["encounters"] = v.encounters;
  j["cameras"] = v.cameras;
  j["first_seen"] = format_iso8601_utc(v.first);
  j["last_seen"] = format_iso8601_utc(v.last);
  return j;
}

}  // namespace

HttpReply CensusService::list_clusters(const std::string& run_id) {
  auto slot = find_run(run_id);
  if (!slot) return error_reply(404, "unknown run " + run_id, "run_id");
  std::shared_ptr<const DatasetEntry> data;
  {
    std::lock_guard lk(mu_);
    data = datasets_.at(slot->dataset);
  }
  std::shared_ptr<const Snapshot> s;
  {
    std::lock_guard lk(slot->m);
    s = slot->snap;
  }
  HttpReply r;
  ojson list = ojson::array();
  for (const auto& [cid, v] : cluster_views(*s, data->by_id)) list.push_back(view_json(cid, v));
  r.body["cluster_count"] = list.size();
  r.body["clusters"] = std::move(list);
  put_status(r, *s);
  return r;
}

HttpReply CensusService::cluster_detail(const std::string& run_id, const std::string& cluster_id) {
  auto slot = find_run(run_id);
  if (!slot) return error_reply(404, "unknown run " + run_id, "run_id");
  std::shared_ptr<const DatasetEntry> data;
  {
    std::lock_guard lk(mu_);
    data = datasets_.at(slot->dataset);
  }
  std::shared_ptr<const Snapshot> s;
  {
    std::lock_guard lk(slot->m);
    s = slot->snap;
  }
  auto views = cluster_views(*s, data->by_id);
  auto it = views.find(cluster_id);
  if (it == views.end()) {
    HttpReply r = error_reply(404, "unknown cluster " + cluster_id, "cluster_id");
    put_status(r, *s);
    return r;
  }
  HttpReply r;
  r.body = view_json(cluster_id, it->second);
  ojson cards = ojson::array();
  for (const auto& m : it->second.members)
    if (auto a = data->by_id.find(m); a != data->by_id.end()) cards.push_back(annotation_card(*a->second));
  r.body["annotations"] = std::move(cards);
  if (s->funnel) {
    auto geo = export_geojson(s->assignment, s->funnel->encounters, data->dataset.cameras, {cluster_id});
    r.body["geojson"] = std::move(geo.document);
    r.body["warnings"] = geo.warnings;
  }
  put_status(r, *s);
  return r;
}

void CensusService::serve(const std::string& host, int port, std::function<void(int)> on_listening) {
  {
    std::lock_guard lk(mu_);
    server_ = std::make_unique<ServerHolder>();
  }
  auto& srv = server_->server;
  auto route = [this](const std::string& method) {
    return [this, method](const httplib::Request& req, httplib::Response& res) {
      std::map<std::string, std::string> headers;
      for (const auto& [k, v] : req.headers) headers.emplace(k, v);
      HttpReply r = handle(method, req.path, req.body, headers);
      res.status = r.status;
      for (const auto& [k, v] : r.headers) res.set_header(k, v);
      if (r.status != 204) res.set_content(r.body.dump(), "application/json");
    };
  };
  srv.Get(".*", route("GET"));
  srv.Post(".*", route("POST"));
  int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  if (on_listening) on_listening(bound);
  srv.listen_after_bind();
}

void CensusService::stop() {
  std::lock_guard lk(mu_);
  if (server_) server_->server.stop();
}

}  // namespace census
