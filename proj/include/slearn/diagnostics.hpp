#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>

namespace slearn {

using DiagnosticSink = std::function<void(const std::string&)>;

namespace detail {

inline std::mutex& diagnostic_mutex() {
  static std::mutex m;
  return m;
}

inline DiagnosticSink& diagnostic_sink_ref() {
  static DiagnosticSink sink = [](const std::string& msg) { std::cerr << "slearn: " << msg << '\n'; };
  return sink;
}

}  // namespace detail

/// Replaces the sink for non-fatal diagnostics (learner failures, early
/// stops). Pass an empty function to silence them.
inline void set_diagnostic_sink(DiagnosticSink sink) {
  std::lock_guard lock(detail::diagnostic_mutex());
  detail::diagnostic_sink_ref() = std::move(sink);
}

inline void diagnostic(const std::string& msg) {
  std::lock_guard lock(detail::diagnostic_mutex());
  if (detail::diagnostic_sink_ref()) detail::diagnostic_sink_ref()(msg);
}

}  // namespace slearn
