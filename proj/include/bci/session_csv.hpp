#pragma once

#include <filesystem>

#include "bci/session.hpp"

namespace bci {

// Session CSV: header `timestamp_ms,Fp1,Fp2,C3,C4,P7,P8,O1,O2,stimulus`,
// timestamps in ms with 3 decimals, voltages in microvolts with 6 decimals,
// stimulus 0 = none / 1 = non-target onset / 2 = target onset.
void write_session_csv(const SessionRecording& rec,
                       const std::filesystem::path& path);

SessionRecording read_session_csv(const std::filesystem::path& path);

}  // namespace bci
