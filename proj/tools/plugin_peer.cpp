// Reference peer for the external-suppressor frame protocol. Reads the
// handshake and frame stream on stdin, writes replies on stdout. The mode
// argument selects the behaviour:
//
//   echo           reply with channel 1's window (the default)
//   echo2          reply with channel 2's window
//   negate         reply with channel 1 sign-flipped
//   bad-magic      answer the handshake with wrong magic bytes
//   bad-status     answer the handshake with a non-zero status
//   wrong-index    echo frames under a shifted frame index
//   truncate=N     behave like echo, then break off mid-reply at frame N
//   stall=MS       behave like echo but sleep MS milliseconds per frame
//
// Everything stays in raw float32 wire format; echo modes return the exact
// bytes they received.

#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include <unistd.h>

namespace {

bool read_exact(void* buf, std::size_t len) {
  auto* p = static_cast<unsigned char*>(buf);
  std::size_t done = 0;
  while (done < len) {
    const ssize_t n = ::read(STDIN_FILENO, p + done, len - done);
    if (n > 0) {
      done += static_cast<std::size_t>(n);
      continue;
    }
    if (n < 0 && errno == EINTR) continue;
    return false;
  }
  return true;
}

bool write_exact(const void* buf, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(buf);
  std::size_t done = 0;
  while (done < len) {
    const ssize_t n = ::write(STDOUT_FILENO, p + done, len - done);
    if (n > 0) {
      done += static_cast<std::size_t>(n);
      continue;
    }
    if (n < 0 && errno == EINTR) continue;
    return false;
  }
  return true;
}

std::uint32_t u32_at(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u32(unsigned char* p, std::uint32_t v) {
  p[0] = static_cast<unsigned char>(v & 0xff);
  p[1] = static_cast<unsigned char>((v >> 8) & 0xff);
  p[2] = static_cast<unsigned char>((v >> 16) & 0xff);
  p[3] = static_cast<unsigned char>((v >> 24) & 0xff);
}

}  // namespace

int main(int argc, char** argv) {
  std::string mode = argc > 1 ? argv[1] : "echo";
  long truncate_at = -1;
  long stall_ms = 0;
  if (mode.rfind("truncate=", 0) == 0) {
    truncate_at = std::strtol(mode.c_str() + 9, nullptr, 10);
    mode = "echo";
  } else if (mode.rfind("stall=", 0) == 0) {
    stall_ms = std::strtol(mode.c_str() + 6, nullptr, 10);
    mode = "echo";
  }

  unsigned char hs[20];
  if (!read_exact(hs, sizeof(hs))) return 2;
  if (std::memcmp(hs, "AHS1", 4) != 0) return 2;
  const std::uint32_t frame_len = u32_at(hs + 8);
  const std::uint32_t channels = u32_at(hs + 16);
  if (frame_len == 0 || channels == 0) return 2;
  if (mode == "echo2" && channels < 2) return 2;

  unsigned char hs_reply[8] = {'A', 'H', 'S', '1', 0, 0, 0, 0};
  if (mode == "bad-magic") std::memcpy(hs_reply, "XXXX", 4);
  if (mode == "bad-status") put_u32(hs_reply + 4, 7);
  if (!write_exact(hs_reply, sizeof(hs_reply))) return 3;
  if (mode == "bad-magic" || mode == "bad-status") return 0;

  std::vector<unsigned char> payload(static_cast<std::size_t>(channels) * frame_len * 4);
  std::vector<unsigned char> reply(4 + static_cast<std::size_t>(frame_len) * 4);

  for (;;) {
    unsigned char head[4];
    if (!read_exact(head, 4)) return 3;
    const std::uint32_t index = u32_at(head);
    if (index == 0xffffffffu) return 0;
    if (!read_exact(payload.data(), payload.size())) return 3;

    if (stall_ms > 0) ::usleep(static_cast<useconds_t>(stall_ms) * 1000);

    if (truncate_at >= 0 && index == static_cast<std::uint32_t>(truncate_at)) {
      write_exact(head, 2);
      return 3;
    }

    const std::size_t src_channel = mode == "echo2" ? 1 : 0;
    put_u32(reply.data(), mode == "wrong-index" ? index + 1 : index);
    std::memcpy(reply.data() + 4, payload.data() + src_channel * frame_len * 4,
                static_cast<std::size_t>(frame_len) * 4);
    if (mode == "negate") {
      // float32 sign flip on the wire.
      for (std::uint32_t i = 0; i < frame_len; ++i) {
        reply[4 + i * 4 + 3] ^= 0x80;
      }
    }
    if (!write_exact(reply.data(), reply.size())) return 3;
  }
}
