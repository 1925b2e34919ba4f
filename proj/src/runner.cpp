#include "tailq/runner.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <mutex>

#include "tailq/error.hpp"

extern char** environ;

namespace tailq {

std::string_view to_string(DriverKind kind) {
  switch (kind) {
    case DriverKind::replay: return "replay";
    case DriverKind::subprocess: return "subprocess";
    case DriverKind::synthetic: return "synthetic";
  }
  return "?";
}

DriverKind parse_driver_kind(std::string_view name) {
  if (name == "replay") return DriverKind::replay;
  if (name == "subprocess") return DriverKind::subprocess;
  if (name == "synthetic") return DriverKind::synthetic;
  throw ConfigError("unknown driver kind '" + std::string(name) + "'");
}

void WorkloadDriver::warmup(std::span<const TimedUnit> units, std::size_t passes) {
  for (std::size_t i = 0; i < passes; ++i) (void)run_round(units);
}

// ---- replay ---------------------------------------------------------------

ReplayDriver::ReplayDriver(TimingStore source) : source_(std::move(source)) {
  for (std::size_t u = 0; u < source_.unit_count(); ++u) index_.emplace(source_.units()[u].id, u);
}

std::vector<double> ReplayDriver::run_round(std::span<const TimedUnit> units) {
  if (cursor_ >= source_.rounds()) {
    throw DriverError("replay exhausted after " + std::to_string(source_.rounds()) + " rounds");
  }
  std::vector<double> out;
  out.reserve(units.size());
  for (const auto& unit : units) {
    auto it = index_.find(unit.id);
    if (it == index_.end()) throw DriverError("replay source has no unit '" + unit.id + "'");
    out.push_back(source_.latency(it->second, cursor_));
  }
  ++cursor_;
  return out;
}

// ---- synthetic ------------------------------------------------------------

std::string_view to_string(SyntheticFamily family) {
  switch (family) {
    case SyntheticFamily::lognormal: return "lognormal";
    case SyntheticFamily::gamma: return "gamma";
    case SyntheticFamily::gaussian_mixture: return "gaussian_mixture";
    case SyntheticFamily::pareto: return "pareto";
    case SyntheticFamily::linear_size: return "linear_size";
  }
  return "?";
}

SyntheticFamily parse_synthetic_family(std::string_view name) {
  if (name == "lognormal") return SyntheticFamily::lognormal;
  if (name == "gamma") return SyntheticFamily::gamma;
  if (name == "gaussian_mixture") return SyntheticFamily::gaussian_mixture;
  if (name == "pareto") return SyntheticFamily::pareto;
  if (name == "linear_size") return SyntheticFamily::linear_size;
  throw ConfigError("unknown synthetic family '" + std::string(name) + "'");
}

void SyntheticSpec::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be positive");
  };
  switch (family) {
    case SyntheticFamily::lognormal:
      positive(log_stddev, "lognormal sigma");
      if (!std::isfinite(log_mean)) throw ConfigError("lognormal mu must be finite");
      break;
    case SyntheticFamily::gamma:
      positive(shape, "gamma shape");
      positive(scale, "gamma scale");
      break;
    case SyntheticFamily::gaussian_mixture: {
      if (components.empty()) throw ConfigError("gaussian mixture needs at least one component");
      double total = 0.0;
      for (const auto& c : components) {
        positive(c.stddev, "mixture component stddev");
        positive(c.mean, "mixture component mean");
        if (!(c.weight >= 0.0)) throw ConfigError("mixture weights must be nonnegative");
        total += c.weight;
      }
      positive(total, "mixture weight total");
      break;
    }
    case SyntheticFamily::pareto:
      positive(pareto_scale, "pareto scale");
      positive(pareto_alpha, "pareto alpha");
      break;
    case SyntheticFamily::linear_size:
      if (!(noise >= 0.0) || !std::isfinite(slope) || !std::isfinite(intercept)) {
        throw ConfigError("linear_size needs finite slope/intercept and noise >= 0");
      }
      break;
  }
}

SyntheticDriver::SyntheticDriver(SyntheticSpec spec) : spec_(std::move(spec)), rng_(spec_.seed) {
  spec_.validate();
  std::vector<double> weights;
  for (const auto& c : spec_.components) weights.push_back(c.weight);
  pick_component_ = std::discrete_distribution<std::size_t>(weights.begin(), weights.end());
}

double SyntheticDriver::draw_once(const TimedUnit& unit) {
  switch (spec_.family) {
    case SyntheticFamily::lognormal:
      return std::lognormal_distribution<double>(spec_.log_mean, spec_.log_stddev)(rng_);
    case SyntheticFamily::gamma:
      return std::gamma_distribution<double>(spec_.shape, spec_.scale)(rng_);
    case SyntheticFamily::gaussian_mixture: {
      const auto& c = spec_.components[pick_component_(rng_)];
      return std::normal_distribution<double>(c.mean, c.stddev)(rng_);
    }
    case SyntheticFamily::pareto: {
      // Inverse CDF on (0, 1].
      const double u = 1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
      return spec_.pareto_scale / std::pow(u, 1.0 / spec_.pareto_alpha);
    }
    case SyntheticFamily::linear_size: {
      double noise = spec_.noise > 0.0 ? std::normal_distribution<double>(0.0, spec_.noise)(rng_) : 0.0;
      return spec_.slope * unit.size + spec_.intercept + noise;
    }
  }
  return 0.0;
}

double SyntheticDriver::draw(const TimedUnit& unit) {
  constexpr int kMaxAttempts = 10000;
  for (int i = 0; i < kMaxAttempts; ++i) {
    const double v = draw_once(unit);
    if (v > 0.0 && std::isfinite(v)) return v;
  }
  throw DriverError("synthetic generator for unit '" + unit.id + "' keeps producing non-positive latencies");
}

std::vector<double> SyntheticDriver::run_round(std::span<const TimedUnit> units) {
  std::vector<double> out;
  out.reserve(units.size());
  for (const auto& unit : units) out.push_back(draw(unit));
  return out;
}

// ---- subprocess -----------------------------------------------------------

namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

std::string strip_cr(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
  return s;
}

}  // namespace

SubprocessDriver::SubprocessDriver(std::vector<std::string> argv, std::chrono::milliseconds reply_timeout)
    : argv_(std::move(argv)), timeout_(reply_timeout) {
  if (argv_.empty()) throw ConfigError("subprocess driver needs a command");
  ignore_sigpipe();

  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw DriverError(std::string("pipe: ") + std::strerror(errno));
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw DriverError(std::string("pipe: ") + std::strerror(errno));
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

  std::vector<char*> args;
  for (auto& a : argv_) args.push_back(a.data());
  args.push_back(nullptr);

  pid_t pid = -1;
  const int rc = ::posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    throw DriverError("cannot start '" + argv_[0] + "': " + std::strerror(rc));
  }
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];

  try {
    send_line("HELLO tailq/1");
    const std::string reply = read_line();
    if (reply != "READY") throw DriverError("protocol violation: expected READY, got '" + reply + "'");
  } catch (...) {
    shutdown();
    throw;
  }
}

SubprocessDriver::~SubprocessDriver() { shutdown(); }

void SubprocessDriver::shutdown() {
  if (to_child_ >= 0) ::close(to_child_);
  to_child_ = -1;
  if (pid_ > 0) {
    // Closing stdin asks the child to exit; give it a moment before killing.
    int status = 0;
    bool reaped = false;
    for (int i = 0; i < 50 && !reaped; ++i) {
      const pid_t r = ::waitpid(pid_, &status, WNOHANG);
      if (r == pid_ || r < 0) {
        reaped = true;
      } else {
        ::usleep(10000);
      }
    }
    if (!reaped) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
    }
    pid_ = -1;
  }
  if (from_child_ >= 0) ::close(from_child_);
  from_child_ = -1;
}

void SubprocessDriver::send_line(const std::string& line) {
  if (to_child_ < 0) throw DriverError("subprocess died");
  std::string msg = line + "\n";
  std::size_t off = 0;
  while (off < msg.size()) {
    const ssize_t n = ::write(to_child_, msg.data() + off, msg.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw DriverError(std::string("subprocess died (write failed: ") + std::strerror(errno) + ")");
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string SubprocessDriver::read_line() {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return strip_cr(std::move(line));
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw DriverError("subprocess reply timed out");
    pollfd pfd{from_child_, POLLIN, 0};
    const int pr = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (pr < 0) {
      if (errno == EINTR) continue;
      throw DriverError(std::string("poll: ") + std::strerror(errno));
    }
    if (pr == 0) continue;
    char chunk[4096];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw DriverError(std::string("subprocess died (read failed: ") + std::strerror(errno) + ")");
    }
    if (n == 0) throw DriverError("subprocess died (unexpected end of output)");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::vector<double> SubprocessDriver::run_round(std::span<const TimedUnit> units) {
  std::vector<double> out;
  out.reserve(units.size());
  for (const auto& unit : units) {
    if (unit.id.find_first_of("\r\n") != std::string::npos) {
      throw DriverError("unit id '" + unit.id + "' cannot be sent over the line protocol");
    }
    const auto start = std::chrono::steady_clock::now();
    send_line("INFER " + unit.id);
    const std::string reply = read_line();
    const auto stop = std::chrono::steady_clock::now();

    if (reply.rfind("ERR", 0) == 0 && (reply.size() == 3 || reply[3] == ' ')) {
      throw DriverError("child reported error for '" + unit.id + "': " + (reply.size() > 4 ? reply.substr(4) : ""));
    }
    if (reply != "DONE " + unit.id) {
      throw DriverError("protocol violation: expected 'DONE " + unit.id + "', got '" + reply + "'");
    }
    out.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
  }
  return out;
}

}  // namespace tailq
