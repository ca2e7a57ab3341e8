// Scripted session on the synthetic player graph: two probes, a link drawn
// between their focus views, a few frames of deformation and a teleport.
//
//   probekit_demo [script.jsonl]
//
// Prints a line per command and, given a path, writes the command log that
// `probekit replay` and `probekit validate` accept.

#include <fstream>
#include <iostream>

#include "probekit/probekit.hpp"

using namespace probekit;

namespace {

class Recorder {
 public:
  const SessionState& state() const { return session_.state(); }

  void run(CommandPayload payload) {
    Command c{session_.next_seq(), std::move(payload)};
    const auto r = session_.apply(c, false);
    if (!r.ok) {
      std::cerr << "seq " << c.seq << " " << to_string(c.kind()) << " failed: " << to_string(r.code) << ": "
                << r.message << '\n';
      std::exit(1);
    }
    log_.push_back(c);
    std::cout << "seq " << c.seq << ' ' << to_string(c.kind()) << "  nodes=" << state().graph.node_count()
              << " links=" << state().graph.link_count() << " probes=" << state().probes.size()
              << " haptic=" << state().haptic << '\n';
  }

  void write(const std::string& path) const {
    std::ofstream out(path);
    for (const auto& c : log_) out << command_log_line(c) << '\n';
  }

  std::string hash() const { return session_.hash(); }

 private:
  Session session_;
  std::vector<Command> log_;
};

}  // namespace

int main(int argc, char** argv) {
  Recorder rec;
  rec.run(cmd::LoadGraph{std::nullopt, SyntheticSpec{}, false});
  cmd::RunLayout layout;
  layout.params.seed = 7;
  rec.run(layout);
  rec.run(cmd::SetViewMode{ViewMode::Exocentric});

  // Probe 1 on the player with the most minutes.
  rec.run(cmd::AutoPlaceProbe{"minutesPlayed", Objective::Max, 1.2});

  // Probe 2 by hand: aim at the player with the fewest minutes, overshoot,
  // then pull back onto it.
  const Graph& g = rec.state().graph;
  const Vec3 target = g.node(extremal_node(g, "minutesPlayed", Objective::Min)).position;
  const Vec3 eye = rec.state().viewpoint.position;
  const Ray ray = Ray::make(eye, target - eye);
  const double t = distance(eye, target);
  rec.run(cmd::BeginProbe{ray, t * 1.2, 0.8});
  rec.run(cmd::AdjustProbe{t, 1.2, std::nullopt});
  rec.run(cmd::PlaceProbe{});

  // Link a node seen in probe 1 to one seen in probe 2.
  const auto& p1 = rec.state().probes.at(ProbeId{1});
  const auto& p2 = rec.state().probes.at(ProbeId{2});
  std::optional<std::pair<NodeId, NodeId>> pick;
  for (const auto& a : p1.members) {
    for (const auto& b : p2.members) {
      if (a != b && !p2.members.count(a) && !p1.members.count(b) && !rec.state().graph.has_link(a, b)) {
        pick.emplace(a, b);
        break;
      }
    }
    if (pick) break;
  }
  if (!pick) {
    std::cerr << "no unlinked pair across the two probes\n";
    return 1;
  }
  rec.run(cmd::SelectNode{NodeRef{pick->first, ProbeId{1}}});
  rec.run(cmd::SelectNode{NodeRef{pick->second, ProbeId{2}}});
  rec.run(cmd::CreateLink{});

  rec.run(cmd::SetProbeActive{ProbeId{1}, true});
  rec.run(cmd::SetProbeActive{ProbeId{2}, true});
  for (int i = 0; i < 30; ++i) rec.run(cmd::Deform{1.0, 0.016, std::nullopt});
  rec.run(cmd::RefreshContent{});

  rec.run(cmd::MoveContentView{ProbeId{1}, {-0.25, 0.0, 0.0}});
  rec.run(cmd::MoveContentView{ProbeId{2}, {0.25, 0.0, 0.0}});
  rec.run(cmd::RotateContentView{ProbeId{2}, Quat::from_axis_angle({0.0, 1.0, 0.0}, kPi / 6.0)});
  rec.run(cmd::SetProbeActive{ProbeId{2}, false});
  for (int i = 0; i < 10; ++i) rec.run(cmd::Deform{-0.5, 0.016, std::nullopt});
  rec.run(cmd::TeleportToProbe{ProbeId{1}, 2.0});

  std::cout << "link " << pick->first << "-" << pick->second << " created across probes 1 and 2\n";
  std::cout << "final hash " << rec.hash() << '\n';
  if (argc > 1) rec.write(argv[1]);
  return 0;
}
