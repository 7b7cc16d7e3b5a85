#include "hspsim/event_stream.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>

#include "hspsim/errors.hpp"

namespace hspsim {

std::string_view origin_name(Origin o) {
  switch (o) {
    case Origin::HeraldedSignal: return "heralded_signal";
    case Origin::Background: return "background";
    case Origin::DarkCount: return "dark_count";
    case Origin::Afterpulse: return "afterpulse";
    case Origin::HeraldPhoton: return "herald_photon";
  }
  return "background";
}

Origin origin_from_name(std::string_view name) {
  if (name == "heralded_signal") return Origin::HeraldedSignal;
  if (name == "background") return Origin::Background;
  if (name == "dark_count") return Origin::DarkCount;
  if (name == "afterpulse") return Origin::Afterpulse;
  if (name == "herald_photon") return Origin::HeraldPhoton;
  throw InvalidParameterError("unknown origin tag: " + std::string(name));
}

bool EventStream::is_sorted() const {
  return std::is_sorted(events.begin(), events.end(),
                        [](const Event& a, const Event& b) { return a.time < b.time; });
}

void EventStream::sort_stable() {
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.time < b.time; });
}

EventStream merge_streams(const EventStream& a, const EventStream& b, std::string channel) {
  EventStream out;
  out.channel = std::move(channel);
  out.events.resize(a.events.size() + b.events.size());
  std::merge(a.events.begin(), a.events.end(), b.events.begin(), b.events.end(),
             out.events.begin(),
             [](const Event& x, const Event& y) { return x.time < y.time; });
  return out;
}

void write_event_stream_csv(std::ostream& os, const EventStream& stream) {
  os << "time_ps,channel,origin\n";
  for (const Event& e : stream.events) {
    os << e.time << ',' << stream.channel << ',' << origin_name(e.origin) << '\n';
  }
}

EventStream read_event_stream_csv(std::istream& is) {
  EventStream out;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(is, line)) throw ParseError("missing header", 1);
  ++line_no;
  if (line.rfind("time_ps,channel,origin", 0) != 0) {
    throw ParseError("unexpected header: " + line, line_no);
  }
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw ParseError("expected 3 fields", line_no);
    }
    TimePs t = 0;
    const auto res = std::from_chars(line.data(), line.data() + c1, t);
    if (res.ec != std::errc{} || res.ptr != line.data() + c1) {
      throw ParseError("bad time_ps field", line_no);
    }
    if (out.channel.empty()) out.channel = line.substr(c1 + 1, c2 - c1 - 1);
    Origin origin;
    try {
      origin = origin_from_name(std::string_view(line).substr(c2 + 1));
    } catch (const InvalidParameterError& e) {
      throw ParseError(e.what(), line_no);
    }
    out.events.push_back(Event{t, origin});
  }
  if (!out.is_sorted()) throw ParseError("events not sorted by time", line_no);
  return out;
}

} // namespace hspsim
