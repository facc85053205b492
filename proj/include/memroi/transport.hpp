#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace memroi {

// A bidirectional stream of framed messages.
class Channel {
 public:
  virtual ~Channel() = default;
  // Throws TransportClosed when the peer is gone.
  virtual void send(const std::vector<std::uint8_t>& payload) = 0;
  // nullopt once the peer has closed and every queued message was read.
  virtual std::optional<std::vector<std::uint8_t>> recv() = 0;
  virtual void close() = 0;
};

class TransportClosed : public std::runtime_error {
 public:
  TransportClosed() : std::runtime_error("transport closed") {}
};

// Two connected in-process endpoints.
std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_loopback_pair();

// Addresses are "unix:/path" or a bare filesystem path.
std::string socket_path(const std::string& addr);

class UnixListener {
 public:
  explicit UnixListener(const std::string& addr);
  ~UnixListener();
  UnixListener(const UnixListener&) = delete;
  UnixListener& operator=(const UnixListener&) = delete;

  std::unique_ptr<Channel> accept();
  const std::string& path() const { return path_; }

 private:
  int fd_ = -1;
  std::string path_;
};

// Fails fast with a descriptive Error when nothing listens at `addr`.
std::unique_ptr<Channel> connect_unix(const std::string& addr);

}  // namespace memroi
