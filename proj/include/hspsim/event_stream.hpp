#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "hspsim/time_units.hpp"

namespace hspsim {

// Ground-truth provenance of a timed event. Tags survive every transformation
// so downstream classification can be audited against what actually happened.
enum class Origin : std::uint8_t {
  HeraldedSignal, // signal photon whose own herald opened the current window
  Background,     // stray light or unheralded signal photons
  DarkCount,
  Afterpulse,
  HeraldPhoton, // idler detection in the heralding arm
};

std::string_view origin_name(Origin o);
Origin origin_from_name(std::string_view name);

struct Event {
  TimePs time = 0;
  Origin origin = Origin::Background;
};

// Time-sorted tagged events on one named channel. Ties keep generation order.
struct EventStream {
  std::string channel;
  std::vector<Event> events;

  bool is_sorted() const;
  void sort_stable();
  std::size_t size() const { return events.size(); }
};

EventStream merge_streams(const EventStream& a, const EventStream& b, std::string channel);

// CSV: header `time_ps,channel,origin`, one row per event, exact integers.
void write_event_stream_csv(std::ostream& os, const EventStream& stream);
EventStream read_event_stream_csv(std::istream& is);

} // namespace hspsim
