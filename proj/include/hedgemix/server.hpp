#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hedgemix/harness.hpp"

namespace httplib {
class Server;
}

namespace hedgemix {

// One entry of the server-pushed stream. Ids are consecutive from 1.
struct StreamEvent {
  std::uint64_t id = 0;
  std::string kind;  // step | admit | retire | done
  std::string data;  // JSON document
};

// Fixed-capacity event history; readers that fall behind get a resync marker.
class EventRing {
 public:
  explicit EventRing(std::size_t capacity = 4096) : capacity_(capacity) {}

  std::uint64_t push(std::string kind, std::string data);
  // Events with id > since, waiting up to `wait` for one to arrive. Sets
  // `gap` when events after `since` were already evicted.
  std::vector<StreamEvent> since(std::uint64_t since, std::chrono::milliseconds wait, bool& gap);
  std::uint64_t last_id() const;
  void close();
  bool closed() const;

 private:
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<StreamEvent> events_;
  std::uint64_t next_ = 1;
  bool closed_ = false;
};

// Live-run control service. A single run-loop thread owns the session;
// HTTP handlers reach it only through the job queue.
class ControlServer {
 public:
  ControlServer(const ExperimentConfig& config, std::uint64_t seed, std::optional<std::filesystem::path> out_dir);
  ~ControlServer();
  ControlServer(const ControlServer&) = delete;
  ControlServer& operator=(const ControlServer&) = delete;

  // Binds and starts serving; port 0 picks a free port. Returns the bound port.
  int start(const std::string& host, int port);
  void stop();
  // Blocks until the run finishes and every job is drained, or stop().
  void wait_done();

  // Same entry points the HTTP handlers use.
  CommandResult status();
  CommandResult inject(const json& body);
  CommandResult retire(const json& body);
  CommandResult pause();
  CommandResult resume();
  CommandResult step(const json& body);

  EventRing& events() { return events_; }

 private:
  using Job = std::function<CommandResult(Session&)>;
  CommandResult submit(Job job);
  void loop();
  void do_step();

  std::unique_ptr<Session> session_;
  EventRing events_;
  std::unique_ptr<httplib::Server> http_;
  std::thread http_thread_;
  std::thread run_thread_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::pair<Job, std::promise<CommandResult>>> jobs_;
  bool paused_ = false;
  bool stopping_ = false;
  bool finished_ = false;
  std::size_t step_delay_ms_ = 0;
};

// "host:port", ":port" or "port".
std::pair<std::string, int> parse_listen(const std::string& addr);

}  // namespace hedgemix
