#include "herdtrack/track_stream.hpp"

#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <nlohmann/json.hpp>

#include "herdtrack/errors.hpp"

namespace herdtrack {

namespace {

using nlohmann::json;

json parse_line(std::string_view line) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed record: ") + e.what());
  }
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(key, "missing field");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(key, "wrong type");
  }
}

TrackStatus parse_status(const std::string& s) {
  if (s == "tentative") return TrackStatus::Tentative;
  if (s == "confirmed") return TrackStatus::Confirmed;
  throw ConfigError("status", "unknown status '" + s + "'");
}

}  // namespace

std::string format_fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  if (std::strcmp(buf, "-0.00") == 0) return "0.00";
  return buf;
}

std::string encode_frame(const FrameResult& r) {
  std::string out = "{\"frame\": " + std::to_string(r.frame_index) +
                    ", \"detector_ran\": " + (r.detector_ran ? "true" : "false") +
                    ", \"tracks\": [";
  bool first = true;
  for (const auto& t : r.tracks) {
    if (t.status == TrackStatus::Deleted) continue;
    if (!first) out += ", ";
    first = false;
    out += "{\"id\": " + std::to_string(t.id) + ", \"tlbr\": [" + format_fixed2(t.box.x_tl) +
           ", " + format_fixed2(t.box.y_tl) + ", " + format_fixed2(t.box.x_br) + ", " +
           format_fixed2(t.box.y_br) + "], \"class\": " + std::to_string(t.class_id) +
           ", \"status\": \"" + to_string(t.status) + "\"}";
  }
  out += "]}";
  return out;
}

std::string encode_command(std::int64_t frame, const ControlCommand& cmd) {
  return "{\"frame\": " + std::to_string(frame) + ", \"yaw\": " + format_fixed2(cmd.yaw_rate) +
         ", \"pitch\": " + format_fixed2(cmd.pitch_rate) +
         ", \"roll\": " + format_fixed2(cmd.roll_rate) + "}";
}

FrameResult decode_frame(std::string_view line) {
  const json j = parse_line(line);
  FrameResult r;
  r.frame_index = field<std::int64_t>(j, "frame");
  r.detector_ran = field<bool>(j, "detector_ran");
  const auto tracks = field<json>(j, "tracks");
  if (!tracks.is_array()) throw ConfigError("tracks", "must be an array");
  for (const auto& t : tracks) {
    TrackReport rep;
    rep.id = field<std::int64_t>(t, "id");
    const auto tlbr = field<std::vector<double>>(t, "tlbr");
    if (tlbr.size() != 4) throw ConfigError("tlbr", "must hold four numbers");
    rep.box = BBox{tlbr[0], tlbr[1], tlbr[2], tlbr[3]};
    rep.class_id = field<int>(t, "class");
    rep.status = parse_status(field<std::string>(t, "status"));
    r.tracks.push_back(rep);
  }
  return r;
}

CommandRecord decode_command(std::string_view line) {
  const json j = parse_line(line);
  CommandRecord rec;
  rec.frame = field<std::int64_t>(j, "frame");
  rec.cmd.yaw_rate = field<double>(j, "yaw");
  rec.cmd.pitch_rate = field<double>(j, "pitch");
  rec.cmd.roll_rate = field<double>(j, "roll");
  return rec;
}

LineChannel::LineChannel(LineChannel&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)), buffer_(std::move(other.buffer_)) {}

LineChannel& LineChannel::operator=(LineChannel&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(other.fd_, -1);
    buffer_ = std::move(other.buffer_);
  }
  return *this;
}

LineChannel::~LineChannel() {
  if (fd_ >= 0) ::close(fd_);
}

void LineChannel::write_line(std::string_view line) {
  std::string data(line);
  data.push_back('\n');
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(std::string("socket write failed: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> LineChannel::read_line() {
  for (;;) {
    const auto pos = buffer_.find('\n');
    if (pos != std::string::npos) {
      std::string line = buffer_.substr(0, pos);
      buffer_.erase(0, pos + 1);
      return line;
    }
    char chunk[4096];
    const ssize_t n = ::read(fd_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(std::string("socket read failed: ") + std::strerror(errno));
    }
    if (n == 0) {
      if (buffer_.empty()) return std::nullopt;
      return std::exchange(buffer_, {});
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void LineChannel::close_write() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
}

ChannelPair make_channel_pair() {
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) {
    throw Error(std::string("socketpair failed: ") + std::strerror(errno));
  }
  return ChannelPair{LineChannel(fds[0]), LineChannel(fds[1])};
}

}  // namespace herdtrack
