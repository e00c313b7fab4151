#pragma once

namespace cornersim {

inline constexpr const char* kEngineVersion = "0.1.0";

inline constexpr int kScenarioSchemaVersion = 1;
inline constexpr int kTraceSchemaVersion    = 1;
inline constexpr int kAgentProtocolVersion  = 1;

}  // namespace cornersim
