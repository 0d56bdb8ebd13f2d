// Copyright (C) 2026 SMI contributors
// SPDX-License-Identifier: Apache-2.0
//
// Live session service. A connection starts in JSON-lines mode; a first
// line beginning with "GET " is treated as a WebSocket upgrade instead.
//
// client -> server
//   {"t": 12, "o": [301 floats]}                       one frame
//   {"type": "hello", "mode": "json"|"binary", "side": "left"|"right"}
//   {"type": "reset"}
//   in binary mode (raw TCP): 1208-byte frames; over WebSocket: binary messages
// server -> client
//   {"type": "probs", "t", "probs": [17], "top", "force_n"}   every frame
//   {"type": "cmd", "t", "cmd": [8], "probs": [17], "force_n", "pose": {...}}
//                                                     every emit_divider frames
//   {"type": "error", "kind", "message"}              session stays open

#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "smi/neuralcore/model.hpp"
#include "smi/runtime/engine.hpp"

namespace smi::serve {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8765;
};

/// "host:port", ":port" or "port". ConfigInvalid on malformed input.
Endpoint parse_endpoint(std::string_view s);

/// Transport-independent session state: one engine and one simulated pose.
class SessionProtocol {
 public:
  SessionProtocol(const nn::ModelParams<float>& params, rt::RuntimeConfig cfg, sense::ModalityMask mask);

  std::vector<std::string> on_text(std::string_view line);
  std::vector<std::string> on_binary(std::span<const std::uint8_t> bytes);
  bool binary_mode() const { return binary_; }

 private:
  std::vector<std::string> on_frame(const sense::SensorFrame& f);
  std::vector<std::string> on_control(const nlohmann::json& j);

  const nn::ModelParams<float>& params_;
  rt::RuntimeConfig cfg_;
  sense::ModalityMask mask_;
  std::unique_ptr<rt::Engine> engine_;
  rt::PoseState pose_;
  bool binary_ = false;
};

std::string error_message(std::string_view kind, std::string_view message);

class Server {
 public:
  Server(nn::ModelParams<float> params, sense::ModalityMask mask, rt::RuntimeConfig cfg, Endpoint where);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds immediately; BindFailure when the address is unavailable.
  std::uint16_t port() const { return port_; }
  /// Serves until stop() is called from another thread.
  void run();
  void stop();
  std::size_t sessions_started() const { return sessions_.load(); }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  nn::ModelParams<float> params_;
  sense::ModalityMask mask_;
  rt::RuntimeConfig cfg_;
  std::uint16_t port_ = 0;
  std::atomic<std::size_t> sessions_{0};
};

}  // namespace smi::serve
