#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "census/config.hpp"
#include "census/ingest.hpp"
#include "census/json_io.hpp"

namespace census {

using ServiceClock = std::chrono::steady_clock;

struct ServiceOptions {
  std::optional<std::filesystem::path> db;  // run snapshots and review logs go under db/runs/
  std::chrono::seconds lease_ttl{120};
  std::function<ServiceClock::time_point()> now = [] { return ServiceClock::now(); };
  std::chrono::seconds decision_wait{30};  // how long a POST waits for the engine to consume it
};

struct HttpReply {
  int status = 200;
  ojson body;  // null for 204
  std::map<std::string, std::string> headers;
};

struct RunSlot;

/// Run control, cluster state and the review queue behind a JSON API.
/// Each run owns a worker thread that is the only mutator of its engine;
/// request handlers read published snapshots and enqueue decisions.
class CensusService {
 public:
  explicit CensusService(ServiceOptions opts = {});
  ~CensusService();
  CensusService(const CensusService&) = delete;
  CensusService& operator=(const CensusService&) = delete;

  /// The simulated oracles need ground truth for every annotation.
  void register_dataset(const std::string& name, Dataset d, GroundTruth truth, RunConfig defaults = {});

  /// Reloads runs persisted under db/runs/ (call after registering datasets).
  std::size_t restore_runs();

  HttpReply handle(const std::string& method, const std::string& path, const std::string& body,
                   const std::map<std::string, std::string>& headers = {});

  /// Blocks until the run's worker is waiting for a human or finished.
  bool wait_quiescent(const std::string& run_id, std::chrono::milliseconds timeout = std::chrono::seconds(60));

  /// Serves HTTP until stop() is called. Port 0 picks a free port.
  void serve(const std::string& host, int port, std::function<void(int)> on_listening = {});
  void stop();

  /// Stops every worker; persisted runs come back as suspended.
  void shutdown();

  struct DatasetEntry;

 private:
  HttpReply create_run(const std::string& body, const std::map<std::string, std::string>& headers);
  HttpReply get_run(const std::string& run_id);
  HttpReply next_review(const std::string& run_id);
  HttpReply post_review(const std::string& run_id, const std::string& request_id, const std::string& body);
  HttpReply list_clusters(const std::string& run_id);
  HttpReply cluster_detail(const std::string& run_id, const std::string& cluster_id);
  HttpReply review_log(const std::string& run_id);
  HttpReply resume_run(const std::string& run_id);
  std::shared_ptr<RunSlot> find_run(const std::string& run_id);
  std::shared_ptr<RunSlot> start_run(const std::string& run_id, const std::string& dataset, const std::string& mode,
                                     const RunConfig& cfg, const ojson& meta, bool restore);

  ServiceOptions opts_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<DatasetEntry>> datasets_;
  std::map<std::string, std::shared_ptr<RunSlot>> runs_;
  std::map<std::string, std::string> idempotency_;
  std::size_t next_run_ = 1;
  struct ServerHolder;
  std::unique_ptr<ServerHolder> server_;
};

}  // namespace census
