#include "memroi/transport.hpp"

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <stdexcept>
#include <deque>
#include <mutex>

#include "memroi/diagnostics.hpp"
#include "memroi/wire.hpp"

namespace memroi {

namespace {

struct Queue {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::vector<std::uint8_t>> items;
  bool closed = false;
};

class LoopbackChannel : public Channel {
 public:
  LoopbackChannel(std::shared_ptr<Queue> in, std::shared_ptr<Queue> out) : in_(std::move(in)), out_(std::move(out)) {}
  ~LoopbackChannel() override { close(); }

  void send(const std::vector<std::uint8_t>& payload) override {
    std::lock_guard lk(out_->mu);
    if (out_->closed) throw TransportClosed();
    out_->items.push_back(payload);
    out_->cv.notify_all();
  }

  std::optional<std::vector<std::uint8_t>> recv() override {
    std::unique_lock lk(in_->mu);
    in_->cv.wait(lk, [&] { return !in_->items.empty() || in_->closed; });
    if (in_->items.empty()) return std::nullopt;
    auto v = std::move(in_->items.front());
    in_->items.pop_front();
    return v;
  }

  void close() override {
    for (auto* q : {in_.get(), out_.get()}) {
      std::lock_guard lk(q->mu);
      q->closed = true;
      q->cv.notify_all();
    }
  }

 private:
  std::shared_ptr<Queue> in_, out_;
};

class SocketChannel : public Channel {
 public:
  explicit SocketChannel(int fd) : fd_(fd) {}
  ~SocketChannel() override { close(); }

  void send(const std::vector<std::uint8_t>& payload) override {
    if (fd_ < 0) throw TransportClosed();
    auto bytes = frame(payload);
    std::size_t off = 0;
    while (off < bytes.size()) {
      ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw TransportClosed();
      off += static_cast<std::size_t>(n);
    }
  }

  std::optional<std::vector<std::uint8_t>> recv() override {
    if (fd_ < 0) return std::nullopt;
    std::uint8_t hdr[4];
    if (!read_exact(hdr, 4)) return std::nullopt;
    const std::uint32_t n = (std::uint32_t{hdr[0]} << 24) | (std::uint32_t{hdr[1]} << 16) |
                            (std::uint32_t{hdr[2]} << 8) | hdr[3];
    if (n > kMaxFrame) throw Error("protocol error: frame of " + std::to_string(n) + " bytes");
    std::vector<std::uint8_t> buf(n);
    if (!read_exact(buf.data(), n)) return std::nullopt;
    return buf;
  }

  void close() override {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  // False when the peer goes away, including mid-frame.
  bool read_exact(std::uint8_t* p, std::size_t n) {
    std::size_t off = 0;
    while (off < n) {
      ssize_t r = ::recv(fd_, p + off, n - off, 0);
      if (r < 0 && errno == EINTR) continue;
      if (r <= 0) return false;
      off += static_cast<std::size_t>(r);
    }
    return true;
  }
  int fd_;
};

sockaddr_un make_addr(const std::string& path) {
  sockaddr_un a{};
  a.sun_family = AF_UNIX;
  if (path.empty() || path.size() >= sizeof(a.sun_path)) throw Error("invalid socket path '" + path + "'");
  std::memcpy(a.sun_path, path.c_str(), path.size() + 1);
  return a;
}

}  // namespace

std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_loopback_pair() {
  auto a = std::make_shared<Queue>();
  auto b = std::make_shared<Queue>();
  return {std::make_unique<LoopbackChannel>(a, b), std::make_unique<LoopbackChannel>(b, a)};
}

std::string socket_path(const std::string& addr) {
  if (addr.rfind("unix:", 0) == 0) return addr.substr(5);
  return addr;
}

UnixListener::UnixListener(const std::string& addr) : path_(socket_path(addr)) {
  sockaddr_un a = make_addr(path_);
  fd_ = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (fd_ < 0) throw Error(std::string("socket: ") + std::strerror(errno));
  ::unlink(path_.c_str());
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&a), sizeof a) != 0 || ::listen(fd_, 1) != 0) {
    std::string err = std::strerror(errno);
    ::close(fd_);
    fd_ = -1;
    throw Error("cannot listen on " + path_ + ": " + err);
  }
}

UnixListener::~UnixListener() {
  if (fd_ >= 0) {
    ::close(fd_);
    ::unlink(path_.c_str());
  }
}

std::unique_ptr<Channel> UnixListener::accept() {
  int c;
  do {
    c = ::accept(fd_, nullptr, nullptr);
  } while (c < 0 && errno == EINTR);
  if (c < 0) throw Error(std::string("accept: ") + std::strerror(errno));
  return std::make_unique<SocketChannel>(c);
}

std::unique_ptr<Channel> connect_unix(const std::string& addr) {
  const std::string path = socket_path(addr);
  sockaddr_un a = make_addr(path);
  int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (fd < 0) throw Error(std::string("socket: ") + std::strerror(errno));
  if (::connect(fd, reinterpret_cast<sockaddr*>(&a), sizeof a) != 0) {
    std::string err = std::strerror(errno);
    ::close(fd);
    throw Error("cannot connect to monitor at " + path + ": " + err);
  }
  return std::make_unique<SocketChannel>(fd);
}

}  // namespace memroi
