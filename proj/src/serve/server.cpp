// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0

#include "smi/serve/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <charconv>
#include <list>

#include "smi/common/error.hpp"
#include "smi/sensekit/wire.hpp"

namespace smi::serve {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace ws = boost::beast::websocket;
using tcp = asio::ip::tcp;

Endpoint parse_endpoint(std::string_view s) {
  Endpoint e;
  std::string_view port_part = s;
  const auto colon = s.rfind(':');
  if (colon != std::string_view::npos) {
    if (colon > 0) e.host = std::string(s.substr(0, colon));
    port_part = s.substr(colon + 1);
  }
  unsigned value = 0;
  const auto [ptr, ec] = std::from_chars(port_part.data(), port_part.data() + port_part.size(), value);
  if (ec != std::errc() || ptr != port_part.data() + port_part.size() || value > 65535)
    throw Error(ErrorKind::config_invalid, "bad bind address '" + std::string(s) + "'");
  e.port = static_cast<std::uint16_t>(value);
  return e;
}

std::string error_message(std::string_view kind, std::string_view message) {
  return nlohmann::json{{"type", "error"}, {"kind", kind}, {"message", message}}.dump();
}

SessionProtocol::SessionProtocol(const nn::ModelParams<float>& params, rt::RuntimeConfig cfg,
                                 sense::ModalityMask mask)
    : params_(params), cfg_(std::move(cfg)), mask_(mask) {
  engine_ = std::make_unique<rt::Engine>(params_, cfg_, sense::PatchGeometry::default_grid(), mask_);
}

std::vector<std::string> SessionProtocol::on_frame(const sense::SensorFrame& f) {
  const rt::StepOutput out = engine_->stream_step(f);
  std::vector<std::string> replies;
  const auto top = class_name(static_cast<ContactClass>(out.top_class));
  replies.push_back(nlohmann::json{{"type", "probs"},
                                   {"t", out.t},
                                   {"frame", f.index},
                                   {"probs", out.probs},
                                   {"top", top},
                                   {"force_n", out.force_n}}
                        .dump());
  if (out.cmd) {
    const double dt = double(cfg_.emit_divider) / cfg_.input_rate_hz;
    pose_ = rt::integrate_sim(pose_, *out.cmd, dt);
    replies.push_back(nlohmann::json{{"type", "cmd"},
                                     {"t", out.t},
                                     {"cmd", *out.cmd},
                                     {"probs", out.probs},
                                     {"top", top},
                                     {"force_n", out.force_n},
                                     {"pose", pose_.to_json()}}
                          .dump());
  }
  return replies;
}

std::vector<std::string> SessionProtocol::on_control(const nlohmann::json& j) {
  const std::string type = j["type"].is_string() ? j["type"].get<std::string>() : "";
  if (type == "hello") {
    if (j.contains("mode")) {
      const std::string mode = j["mode"].get<std::string>();
      if (mode != "json" && mode != "binary") throw Error(ErrorKind::protocol_violation, "mode must be json or binary");
      binary_ = mode == "binary";
    }
    if (j.contains("side")) {
      nlohmann::json rc = {{"side", j["side"]}};
      const rt::RuntimeConfig side_cfg = rt::RuntimeConfig::from_json(rc);
      if (side_cfg.side != cfg_.side) {
        cfg_.side = side_cfg.side;
        engine_ = std::make_unique<rt::Engine>(params_, cfg_, sense::PatchGeometry::default_grid(), mask_);
        pose_ = {};
      }
    }
    nlohmann::json classes = nlohmann::json::array(), axes = nlohmann::json::array();
    for (ContactClass c : kAllClasses) classes.push_back(class_name(c));
    for (std::size_t i = 0; i < rt::kAxes; ++i) axes.push_back(rt::axis_name(i));
    return {nlohmann::json{{"type", "hello"},
                           {"mode", binary_ ? "binary" : "json"},
                           {"side", synth::side_name(cfg_.side)},
                           {"mask", mask_.name()},
                           {"classes", classes},
                           {"axes", axes},
                           {"emit_divider", cfg_.emit_divider},
                           {"frame_bytes", sense::kBinaryFrameBytes}}
                .dump()};
  }
  if (type == "reset") {
    engine_->reset();
    pose_ = {};
    return {nlohmann::json{{"type", "reset"}}.dump()};
  }
  throw Error(ErrorKind::protocol_violation, "unknown message type '" + type + "'");
}

std::vector<std::string> SessionProtocol::on_text(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (!j.is_discarded() && j.is_object() && j.contains("type") && j["type"] != "frame") return on_control(j);
    return on_frame(sense::from_json_line(line));
  } catch (const Error& e) {
    return {error_message(error_kind_name(e.kind()), e.what())};
  } catch (const nlohmann::json::exception& e) {
    return {error_message("ProtocolViolation", e.what())};
  }
}

std::vector<std::string> SessionProtocol::on_binary(std::span<const std::uint8_t> bytes) {
  try {
    return on_frame(sense::decode_binary(bytes));
  } catch (const Error& e) {
    return {error_message(error_kind_name(e.kind()), e.what())};
  }
}

struct Server::Impl {
  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::mutex mu;
  std::list<std::shared_ptr<tcp::socket>> live;
  std::vector<std::thread> threads;
  bool stopping = false;
};

namespace {

void serve_lines(tcp::socket& sock, SessionProtocol& proto) {
  asio::streambuf buf(1 << 20);
  boost::system::error_code ec;
  auto send = [&](const std::vector<std::string>& replies) {
    std::string out;
    for (const auto& r : replies) {
      out += r;
      out += '\n';
    }
    asio::write(sock, asio::buffer(out), ec);
  };
  for (;;) {
    if (proto.binary_mode()) {
      std::vector<std::uint8_t> frame(sense::kBinaryFrameBytes);
      // Bytes already buffered by read_until come first.
      const std::size_t have = std::min(buf.size(), frame.size());
      asio::buffer_copy(asio::buffer(frame), buf.data(), have);
      buf.consume(have);
      asio::read(sock, asio::buffer(frame.data() + have, frame.size() - have), ec);
      if (ec) return;
      send(proto.on_binary(frame));
    } else {
      const std::size_t n = asio::read_until(sock, buf, '\n', ec);
      if (ec) {
        if (ec == asio::error::not_found) send({error_message("ProtocolViolation", "line too long")});
        return;
      }
      std::string line(asio::buffers_begin(buf.data()), asio::buffers_begin(buf.data()) + static_cast<long>(n));
      buf.consume(n);
      while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
      if (line.empty()) continue;
      send(proto.on_text(line));
    }
    if (ec) return;
  }
}

void serve_websocket(tcp::socket&& sock, SessionProtocol& proto) {
  ws::stream<tcp::socket> stream(std::move(sock));
  boost::system::error_code ec;
  stream.accept(ec);
  if (ec) return;
  beast::flat_buffer buf;
  for (;;) {
    buf.clear();
    stream.read(buf, ec);
    if (ec) return;
    const auto data = buf.data();
    std::vector<std::string> replies;
    if (stream.got_text()) {
      replies = proto.on_text(std::string_view(static_cast<const char*>(data.data()), data.size()));
    } else {
      replies = proto.on_binary(std::span<const std::uint8_t>(static_cast<const std::uint8_t*>(data.data()), data.size()));
    }
    stream.text(true);
    for (const auto& r : replies) {
      stream.write(asio::buffer(r), ec);
      if (ec) return;
    }
  }
}

}  // namespace

Server::Server(nn::ModelParams<float> params, sense::ModalityMask mask, rt::RuntimeConfig cfg, Endpoint where)
    : impl_(std::make_unique<Impl>()), params_(std::move(params)), mask_(mask), cfg_(std::move(cfg)) {
  cfg_.validate();
  boost::system::error_code ec;
  const auto addr = asio::ip::make_address(where.host, ec);
  if (ec) throw Error(ErrorKind::bind_failure, "bad address " + where.host + ": " + ec.message());
  const tcp::endpoint ep(addr, where.port);
  impl_->acceptor.open(ep.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(tcp::acceptor::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(ep, ec);
  if (!ec) impl_->acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) throw Error(ErrorKind::bind_failure, "cannot bind " + where.host + ":" + std::to_string(where.port) + ": " + ec.message());
  port_ = impl_->acceptor.local_endpoint().port();
}

Server::~Server() {
  stop();
  for (auto& t : impl_->threads)
    if (t.joinable()) t.join();
}

void Server::run() {
  std::function<void()> accept_next;
  accept_next = [this, &accept_next] {
    auto sock = std::make_shared<tcp::socket>(impl_->io);
    impl_->acceptor.async_accept(*sock, [this, sock, &accept_next](boost::system::error_code ec) {
      if (ec) return;
      {
        std::lock_guard<std::mutex> lk(impl_->mu);
        if (impl_->stopping) return;
        impl_->live.push_back(sock);
      }
      ++sessions_;
      sock->set_option(tcp::no_delay(true));
      impl_->threads.emplace_back([this, sock] {
        try {
          SessionProtocol proto(params_, cfg_, mask_);
          char head[4] = {};
          boost::system::error_code pec;
          // Wait for the first four bytes without consuming them.
          std::size_t got = 0;
          while (got < 4 && !pec) got = sock->receive(asio::buffer(head), tcp::socket::message_peek, pec);
          if (!pec) {
            if (std::string_view(head, 4) == "GET ")
              serve_websocket(std::move(*sock), proto);
            else
              serve_lines(*sock, proto);
          }
        } catch (const std::exception&) {
          // A broken session must not take the service down.
        }
        std::lock_guard<std::mutex> lk(impl_->mu);
        impl_->live.remove(sock);
      });
      accept_next();
    });
  };
  accept_next();
  impl_->io.run();
}

void Server::stop() {
  std::lock_guard<std::mutex> lk(impl_->mu);
  if (impl_->stopping) return;
  impl_->stopping = true;
  asio::post(impl_->io, [this] {
    boost::system::error_code ec;
    impl_->acceptor.close(ec);
  });
  for (auto& s : impl_->live) {
    boost::system::error_code ec;
    s->shutdown(tcp::socket::shutdown_both, ec);
  }
  impl_->io.stop();
}

}  // namespace smi::serve
