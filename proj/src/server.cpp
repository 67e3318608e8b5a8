#include "hedgemix/server.hpp"

#include <chrono>

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace hedgemix {

// -- event ring ---------------------------------------------------------------------

std::uint64_t EventRing::push(std::string kind, std::string data) {
  std::uint64_t id;
  {
    std::lock_guard lk(mu_);
    id = next_++;
    events_.push_back({id, std::move(kind), std::move(data)});
    if (events_.size() > capacity_) events_.pop_front();
  }
  cv_.notify_all();
  return id;
}

std::vector<StreamEvent> EventRing::since(std::uint64_t since, std::chrono::milliseconds wait, bool& gap) {
  std::unique_lock lk(mu_);
  cv_.wait_for(lk, wait, [&] { return closed_ || next_ - 1 > since; });
  gap = !events_.empty() && events_.front().id > since + 1;
  std::vector<StreamEvent> out;
  for (const auto& e : events_)
    if (e.id > since) out.push_back(e);
  return out;
}

std::uint64_t EventRing::last_id() const {
  std::lock_guard lk(mu_);
  return next_ - 1;
}

void EventRing::close() {
  {
    std::lock_guard lk(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool EventRing::closed() const {
  std::lock_guard lk(mu_);
  return closed_;
}

// -- control server -----------------------------------------------------------------

namespace {

CommandResult error(int status, const std::string& msg, std::vector<std::string> fields = {}) {
  return {status, json{{"error", msg}, {"fields", fields}}};
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  return json::parse(body);
}

}  // namespace

ControlServer::ControlServer(const ExperimentConfig& config, std::uint64_t seed,
                             std::optional<std::filesystem::path> out_dir)
    : session_(std::make_unique<Session>(config, seed, std::move(out_dir))),
      paused_(config.start_paused),
      step_delay_ms_(config.step_delay_ms) {
  session_->on_step = [this](const StepRecord& rec) { events_.push("step", session_->step_event(rec).dump()); };
  session_->on_event = [this](std::size_t t, const std::string& kind, SpecialistId id, const std::string& detail) {
    events_.push(kind, json{{"t", t}, {"id", id}, {"detail", detail}}.dump());
  };
  run_thread_ = std::thread([this] { loop(); });
}

ControlServer::~ControlServer() { stop(); }

void ControlServer::loop() {
  for (;;) {
    std::unique_lock lk(mu_);
    cv_.wait(lk, [&] { return stopping_ || !jobs_.empty() || (!paused_ && !finished_); });
    if (stopping_) break;
    if (!jobs_.empty()) {
      auto [job, promise] = std::move(jobs_.front());
      jobs_.pop_front();
      lk.unlock();
      try {
        promise.set_value(job(*session_));
      } catch (const std::exception& e) {
        promise.set_value(error(500, e.what()));
      }
      continue;
    }
    lk.unlock();
    do_step();
    if (step_delay_ms_) std::this_thread::sleep_for(std::chrono::milliseconds(step_delay_ms_));
  }
  // fail anything still queued
  std::lock_guard lk(mu_);
  for (auto& [job, promise] : jobs_) promise.set_value(error(503, "server stopping"));
  jobs_.clear();
}

void ControlServer::do_step() {
  if (session_->done()) return;
  try {
    session_->step();
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    std::lock_guard lk(mu_);
    finished_ = true;
    events_.push("error", json{{"error", e.what()}}.dump());
    cv_.notify_all();
    return;
  }
  if (session_->done()) {
    session_->flush();
    std::lock_guard lk(mu_);
    finished_ = true;
    events_.push("done", json{{"t", session_->t()}}.dump());
    cv_.notify_all();
  }
}

CommandResult ControlServer::submit(Job job) {
  std::future<CommandResult> fut;
  {
    std::lock_guard lk(mu_);
    if (stopping_) return error(503, "server stopping");
    jobs_.emplace_back(std::move(job), std::promise<CommandResult>());
    fut = jobs_.back().second.get_future();
  }
  cv_.notify_all();
  return fut.get();
}

CommandResult ControlServer::status() {
  return submit([this](Session& s) {
    json st = s.status();
    std::lock_guard lk(mu_);
    st["paused"] = paused_;
    st["done"] = s.done();
    st["last_event"] = events_.last_id();
    return CommandResult{200, st};
  });
}

CommandResult ControlServer::inject(const json& body) {
  Command c;
  try {
    json b = body;
    b["kind"] = "inject";
    c = parse_command(b, *session_->domain().registry, false);
  } catch (const SpecError& e) {
    return error(400, e.what(), e.fields());
  }
  return submit([c](Session& s) {
    auto res = s.apply(c);
    s.flush();
    return res;
  });
}

CommandResult ControlServer::retire(const json& body) {
  Command c;
  try {
    json b = body;
    b["kind"] = "retire";
    c = parse_command(b, *session_->domain().registry, false);
  } catch (const SpecError& e) {
    return error(400, e.what(), e.fields());
  }
  return submit([c](Session& s) {
    auto res = s.apply(c);
    s.flush();
    return res;
  });
}

CommandResult ControlServer::pause() {
  std::lock_guard lk(mu_);
  paused_ = true;
  return {200, json{{"paused", true}}};
}

CommandResult ControlServer::resume() {
  {
    std::lock_guard lk(mu_);
    paused_ = false;
  }
  cv_.notify_all();
  return {200, json{{"paused", false}}};
}

CommandResult ControlServer::step(const json& body) {
  std::size_t n = 1;
  if (body.contains("n")) {
    if (!is_natural(body["n"]) || body["n"].get<std::size_t>() == 0)
      return error(400, "n must be a positive integer", {"n"});
    n = body["n"].get<std::size_t>();
  }
  {
    std::lock_guard lk(mu_);
    if (!paused_) return error(409, "step is only allowed while paused");
  }
  return submit([this, n](Session& s) {
    for (std::size_t i = 0; i < n && !s.done(); ++i) do_step();
    s.flush();
    return CommandResult{200, json{{"t", s.t()}, {"done", s.done()}}};
  });
}

void ControlServer::wait_done() {
  std::unique_lock lk(mu_);
  cv_.wait(lk, [&] { return stopping_ || (finished_ && jobs_.empty()); });
}

int ControlServer::start(const std::string& host, int port) {
  http_ = std::make_unique<httplib::Server>();
  auto reply = [](httplib::Response& res, const CommandResult& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto with_body = [reply](std::function<CommandResult(const json&)> fn) {
    return [reply, fn](const httplib::Request& req, httplib::Response& res) {
      json body;
      try {
        body = parse_body(req.body);
      } catch (const json::parse_error& e) {
        return reply(res, error(400, std::string("malformed JSON: ") + e.what(), {"body"}));
      }
      if (!body.is_object()) return reply(res, error(400, "request body must be an object", {"body"}));
      reply(res, fn(body));
    };
  };
  http_->Get("/status", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, status()); });
  http_->Post("/inject", with_body([this](const json& b) { return inject(b); }));
  http_->Post("/retire", with_body([this](const json& b) { return retire(b); }));
  http_->Post("/pause", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, pause()); });
  http_->Post("/resume", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, resume()); });
  http_->Post("/step", with_body([this](const json& b) { return step(b); }));
  http_->Get("/events", [this](const httplib::Request& req, httplib::Response& res) {
    std::uint64_t cursor = 0;
    if (req.has_param("since")) {
      try {
        cursor = std::stoull(req.get_param_value("since"));
      } catch (const std::exception&) {
        res.status = 400;
        res.set_content(error(400, "since must be an integer", {"since"}).body.dump(), "application/json");
        return;
      }
    }
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider("text/event-stream", [this, cursor](std::size_t, httplib::DataSink& sink) mutable {
      while (sink.is_writable()) {
        bool gap = false;
        auto batch = events_.since(cursor, std::chrono::milliseconds(250), gap);
        std::string out;
        if (gap && !batch.empty())
          out += "event: resync\ndata: " + json{{"from", batch.front().id}}.dump() + "\n\n";
        for (const auto& e : batch) {
          out += "id: " + std::to_string(e.id) + "\nevent: " + e.kind + "\ndata: " + e.data + "\n\n";
          cursor = e.id;
        }
        if (!out.empty()) {
          if (!sink.write(out.data(), out.size())) return false;
          return true;
        }
        if (events_.closed()) {
          sink.done();
          return true;
        }
      }
      return false;
    });
  });

  int bound = port == 0 ? http_->bind_to_any_port(host) : (http_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
  http_thread_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
  spdlog::info("control server listening on {}:{}", host, bound);
  return bound;
}

void ControlServer::stop() {
  {
    std::lock_guard lk(mu_);
    if (stopping_ && !run_thread_.joinable()) return;
    stopping_ = true;
  }
  cv_.notify_all();
  events_.close();
  if (http_) http_->stop();
  if (http_thread_.joinable()) http_thread_.join();
  if (run_thread_.joinable()) run_thread_.join();
  if (session_) session_->flush();
}

std::pair<std::string, int> parse_listen(const std::string& addr) {
  auto colon = addr.rfind(':');
  std::string host = "127.0.0.1";
  std::string port = addr;
  if (colon != std::string::npos) {
    if (colon > 0) host = addr.substr(0, colon);
    port = addr.substr(colon + 1);
  }
  try {
    std::size_t used = 0;
    int p = std::stoi(port, &used);
    if (used != port.size() || p < 0 || p > 65535) throw std::invalid_argument(port);
    return {host, p};
  } catch (const std::exception&) {
    throw ConfigError("bad listen address '" + addr + "'");
  }
}

}  // namespace hedgemix
