#pragma once

#include <cstdint>
#include <string>

#include "bci/session.hpp"

namespace bci {

// Line-oriented TCP protocol standing in for LSL:
//   handshake  EEGSTREAM v1 channels=8 rate=256
//   sample     S,<t_ms>,<v1>,...,<v8>
//   marker     M,<t_ms>,<1|2>
//   terminator END
//
// Markers are aligned to the nearest received sample by timestamp.

// Listens on host:port, accepts one producer connection and accumulates
// frames until `duration_s` of sample time elapsed or the stream ends.
// A stream that closes (or sends END) before the requested duration yields
// a recording with `truncated` set.
SessionRecording stream_ingest(const std::string& host, std::uint16_t port,
                               double duration_s);

// Connects to host:port and replays a recording over the protocol.
void stream_replay(const SessionRecording& rec, const std::string& host,
                   std::uint16_t port);

}  // namespace bci
