#include "vodsim/trace.hpp"

#include <cstdio>
#include <ostream>

namespace vodsim {

const char* to_string(ObservationKind kind) {
  switch (kind) {
    case ObservationKind::Join: return "join";
    case ObservationKind::StartupComplete: return "startup";
    case ObservationKind::Interruption: return "interruption";
    case ObservationKind::Resume: return "resume";
    case ObservationKind::BlockDelivered: return "block";
    case ObservationKind::DownloadComplete: return "download_complete";
    case ObservationKind::SlotIdle: return "slot_idle";
    case ObservationKind::Departure: return "departure";
    case ObservationKind::Unchoke: return "unchoke";
    case ObservationKind::Choke: return "choke";
    case ObservationKind::Jump: return "jump";
  }
  return "unknown";
}

void RunTrace::dump(std::ostream& out) const {
  char line[160];
  for (const auto& r : records_) {
    const char* kind = to_string(r.kind);
    switch (r.kind) {
      case ObservationKind::BlockDelivered:
        std::snprintf(line, sizeof line, "%.6f %s %u from=%u bytes=%.0f", r.time_s, kind, r.peer,
                      r.other, r.value);
        break;
      case ObservationKind::Unchoke:
      case ObservationKind::Choke:
        std::snprintf(line, sizeof line, "%.6f %s %u remote=%u", r.time_s, kind, r.peer, r.other);
        break;
      case ObservationKind::Jump:
        std::snprintf(line, sizeof line, "%.6f %s %u target=%u", r.time_s, kind, r.peer, r.other);
        break;
      case ObservationKind::Interruption:
      case ObservationKind::DownloadComplete:
      case ObservationKind::Departure:
        std::snprintf(line, sizeof line, "%.6f %s %u -", r.time_s, kind, r.peer);
        break;
      default:
        std::snprintf(line, sizeof line, "%.6f %s %u value=%.6f", r.time_s, kind, r.peer, r.value);
        break;
    }
    out << line << '\n';
  }
}

}  // namespace vodsim
