#pragma once

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstdint>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "ahs/common.hpp"
#include "ahs/suppressor.hpp"

namespace ahs {

// Runs an enhancement peer as a child process speaking the frame protocol
// over stdio pipes:
//
//   handshake  host -> peer  "AHS1", u32 sample_rate, u32 frame_len, u32 hop,
//                            u32 n_input_channels        (u32 little-endian)
//              peer -> host  "AHS1", u32 status (0 = ok)
//   per frame  host -> peer  u32 frame_index, then n_input_channels x
//                            frame_len float32 samples
//              peer -> host  u32 frame_index (echoed back), frame_len float32
//   shutdown   host -> peer  u32 0xFFFFFFFF, no payload
//
// Each channel is sent as a sliding analysis window of the most recent
// frame_len samples; the reply window is consumed overlap-save style, its
// last hop samples becoming the enhanced block. Samples cross the pipe as
// float32, so the host's doubles are quantized once in each direction.
struct PluginOptions {
  std::vector<std::string> command;  // argv of the peer; command[0] is the executable
  std::size_t input_channels = 1;
  int deadline_ms = 100;  // wall-clock budget per protocol exchange
};

namespace detail {

inline void put_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
  buf.push_back(static_cast<unsigned char>(v & 0xff));
  buf.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  buf.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  buf.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

inline std::uint32_t u32_at(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_f32(std::vector<unsigned char>& buf, double v) {
  const float f = static_cast<float>(v);
  std::uint32_t bits;
  std::memcpy(&bits, &f, sizeof(bits));
  put_u32(buf, bits);
}

inline double f32_at(const unsigned char* p) {
  const std::uint32_t bits = u32_at(p);
  float f;
  std::memcpy(&f, &bits, sizeof(f));
  return static_cast<double>(f);
}

class ExternalSuppressor final : public Suppressor {
 public:
  explicit ExternalSuppressor(PluginOptions opts) : opts_(std::move(opts)) {
    if (opts_.command.empty()) throw ConfigError("external suppressor: empty command");
    if (opts_.input_channels < 1) {
      throw ConfigError("external suppressor: need at least one input channel");
    }
    if (opts_.deadline_ms <= 0) {
      throw ConfigError("external suppressor: deadline must be positive");
    }
  }

  ~ExternalSuppressor() override { shutdown_peer(); }

  ExternalSuppressor(const ExternalSuppressor&) = delete;
  ExternalSuppressor& operator=(const ExternalSuppressor&) = delete;

  std::vector<double> process(const std::vector<std::vector<double>>& channels) override {
    check_input(channels);
    const std::size_t frame_len = stft_.frame_len;
    const std::size_t hop = stft_.hop;

    for (std::size_t c = 0; c < channels.size(); ++c) {
      auto& win = windows_[c];
      std::copy(win.begin() + static_cast<std::ptrdiff_t>(hop), win.end(), win.begin());
      std::copy(channels[c].begin(), channels[c].end(),
                win.begin() + static_cast<std::ptrdiff_t>(frame_len - hop));
    }

    std::vector<unsigned char> msg;
    msg.reserve(4 + opts_.input_channels * frame_len * 4);
    put_u32(msg, static_cast<std::uint32_t>(frame_));
    for (const auto& win : windows_) {
      for (double v : win) put_f32(msg, v);
    }

    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::milliseconds(opts_.deadline_ms);
    write_all(msg.data(), msg.size(), deadline, "frame write");

    unsigned char head[4];
    read_exact(head, 4, deadline, "frame reply");
    const std::uint32_t echoed = u32_at(head);
    if (echoed != frame_) {
      throw ProtocolError("external suppressor: peer answered frame " +
                          std::to_string(echoed) + " to frame " + std::to_string(frame_));
    }

    reply_buf_.resize(frame_len * 4);
    read_exact(reply_buf_.data(), reply_buf_.size(), deadline, "frame payload");

    std::vector<double> out(hop);
    for (std::size_t i = 0; i < hop; ++i) {
      out[i] = f32_at(reply_buf_.data() + (frame_len - hop + i) * 4);
    }
    ++frame_;
    return out;
  }

  void reset() override {
    shutdown_peer();
    windows_.assign(opts_.input_channels, std::vector<double>(stft_.frame_len, 0.0));
    frame_ = 0;
    spawn();
    handshake();
  }

  std::size_t input_channels() const override { return opts_.input_channels; }
  std::string name() const override { return "external(" + opts_.command[0] + ")"; }

 private:
  void spawn() {
    static bool sigpipe_ignored = [] {
      ::signal(SIGPIPE, SIG_IGN);
      return true;
    }();
    (void)sigpipe_ignored;

    int to_child[2];
    int from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0 || ::pipe2(from_child, O_CLOEXEC) != 0) {
      throw ProtocolError("external suppressor: pipe creation failed");
    }

    const pid_t pid = ::fork();
    if (pid < 0) {
      throw ProtocolError("external suppressor: fork failed");
    }
    if (pid == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      std::vector<char*> argv;
      argv.reserve(opts_.command.size() + 1);
      for (const auto& a : opts_.command) argv.push_back(const_cast<char*>(a.c_str()));
      argv.push_back(nullptr);
      ::execvp(argv[0], argv.data());
      ::_exit(127);
    }

    pid_ = pid;
    ::close(to_child[0]);
    ::close(from_child[1]);
    wr_fd_ = to_child[1];
    rd_fd_ = from_child[0];
    ::fcntl(wr_fd_, F_SETFL, O_NONBLOCK);
    ::fcntl(rd_fd_, F_SETFL, O_NONBLOCK);
  }

  void handshake() {
    std::vector<unsigned char> msg = {'A', 'H', 'S', '1'};
    put_u32(msg, static_cast<std::uint32_t>(sample_rate_));
    put_u32(msg, static_cast<std::uint32_t>(stft_.frame_len));
    put_u32(msg, static_cast<std::uint32_t>(stft_.hop));
    put_u32(msg, static_cast<std::uint32_t>(opts_.input_channels));

    // Spawn latency is outside the peer's control, so the handshake budget
    // never drops below one second.
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::milliseconds(std::max(opts_.deadline_ms, 1000));
    write_all(msg.data(), msg.size(), deadline, "handshake");

    unsigned char reply[8];
    read_exact(reply, 8, deadline, "handshake");
    if (std::memcmp(reply, "AHS1", 4) != 0) {
      throw ProtocolError("external suppressor: handshake magic mismatch from " +
                          opts_.command[0]);
    }
    const std::uint32_t status = u32_at(reply + 4);
    if (status != 0) {
      throw ProtocolError("external suppressor: peer refused handshake (status " +
                          std::to_string(status) + ")");
    }
  }

  void write_all(const unsigned char* data, std::size_t len,
                 std::chrono::steady_clock::time_point deadline, const char* what) {
    std::size_t done = 0;
    while (done < len) {
      wait_io(POLLOUT, deadline, what);
      const ssize_t n = ::write(wr_fd_, data + done, len - done);
      if (n > 0) {
        done += static_cast<std::size_t>(n);
        continue;
      }
      if (n < 0 && (errno == EAGAIN || errno == EINTR)) continue;
      throw ProtocolError(std::string("external suppressor: ") + what +
                          " failed, peer closed the stream");
    }
  }

  void read_exact(unsigned char* data, std::size_t len,
                  std::chrono::steady_clock::time_point deadline, const char* what) {
    std::size_t done = 0;
    while (done < len) {
      wait_io(POLLIN, deadline, what);
      const ssize_t n = ::read(rd_fd_, data + done, len - done);
      if (n > 0) {
        done += static_cast<std::size_t>(n);
        continue;
      }
      if (n < 0 && (errno == EAGAIN || errno == EINTR)) continue;
      throw ProtocolError(std::string("external suppressor: stream ended during ") + what +
                          " after " + std::to_string(done) + " of " + std::to_string(len) +
                          " bytes");
    }
  }

  void wait_io(short events, std::chrono::steady_clock::time_point deadline, const char* what) {
    const auto now = std::chrono::steady_clock::now();
    const auto left =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    if (left <= 0) {
      throw TimeoutError(std::string("external suppressor: ") + what + " deadline exceeded",
                         static_cast<long>(frame_));
    }
    pollfd pfd{events == POLLIN ? rd_fd_ : wr_fd_, events, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(left));
    if (rc == 0) {
      throw TimeoutError(std::string("external suppressor: ") + what + " deadline exceeded",
                         static_cast<long>(frame_));
    }
  }

  void shutdown_peer() noexcept {
    if (pid_ < 0) return;
    if (wr_fd_ >= 0) {
      const unsigned char sentinel[4] = {0xff, 0xff, 0xff, 0xff};
      (void)!::write(wr_fd_, sentinel, 4);
      ::close(wr_fd_);
      wr_fd_ = -1;
    }
    if (rd_fd_ >= 0) {
      ::close(rd_fd_);
      rd_fd_ = -1;
    }
    int status = 0;
    for (int i = 0; i < 100; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) != 0) {
        pid_ = -1;
        return;
      }
      ::usleep(5000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }

  PluginOptions opts_;
  pid_t pid_ = -1;
  int wr_fd_ = -1;
  int rd_fd_ = -1;
  std::vector<std::vector<double>> windows_;
  std::vector<unsigned char> reply_buf_;
  std::size_t frame_ = 0;
};

}  // namespace detail

inline SuppressorPtr make_external_suppressor(PluginOptions opts) {
  return std::make_unique<detail::ExternalSuppressor>(std::move(opts));
}

}  // namespace ahs
