#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "herdtrack/control.hpp"
#include "herdtrack/pipeline.hpp"

namespace herdtrack {

// Newline-delimited JSON records exchanged between the tracker and the
// controller. Field order is fixed and floats carry two decimals so that
// identical runs produce identical bytes.
//
//   {"frame": 7, "detector_ran": true, "tracks": [{"id": 1, "tlbr": [..], "class": 0, "status": "confirmed"}]}
//   {"frame": 7, "yaw": 1.25, "pitch": -0.50, "roll": 0.75}

/// Fixed two-decimal rendering; never produces "-0.00".
std::string format_fixed2(double v);

/// One line, without the trailing newline.
std::string encode_frame(const FrameResult& r);
std::string encode_command(std::int64_t frame, const ControlCommand& cmd);

/// Throws ConfigError naming the missing or mistyped field.
FrameResult decode_frame(std::string_view line);

struct CommandRecord {
  std::int64_t frame{0};
  ControlCommand cmd;
};
CommandRecord decode_command(std::string_view line);

/// Byte stream over a connected local socket, read and written in lines.
/// Owns the file descriptor.
class LineChannel {
public:
  explicit LineChannel(int fd) : fd_(fd) {}
  LineChannel(const LineChannel&) = delete;
  LineChannel& operator=(const LineChannel&) = delete;
  LineChannel(LineChannel&& other) noexcept;
  LineChannel& operator=(LineChannel&& other) noexcept;
  ~LineChannel();

  /// Appends '\n'. Throws Error on a write failure.
  void write_line(std::string_view line);
  /// Next line without its '\n'; nullopt at end of stream.
  std::optional<std::string> read_line();
  /// Shuts down the write side so the peer sees end of stream.
  void close_write();

  int fd() const { return fd_; }

private:
  int fd_{-1};
  std::string buffer_;
};

struct ChannelPair {
  LineChannel tracker;
  LineChannel controller;
};

/// Connected pair of local stream sockets, one end per process role.
ChannelPair make_channel_pair();

}  // namespace herdtrack
