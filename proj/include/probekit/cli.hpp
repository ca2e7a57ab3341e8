#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "probekit/graph_io.hpp"
#include "probekit/invariants.hpp"
#include "probekit/layout3d.hpp"
#include "probekit/service.hpp"
#include "probekit/session.hpp"
#include "probekit/synth.hpp"

namespace probekit {

namespace cli_detail {

/// Exit codes: 0 ok, 1 failed (bad input, failed validation), 2 usage.
inline constexpr int kFailed = 1;
inline constexpr int kUsage = 2;

inline void setup_logging() {
  static bool done = false;
  if (done) return;
  done = true;
  auto logger = spdlog::stderr_color_mt("probekit");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("PROBEKIT_LOG")) spdlog::set_level(spdlog::level::from_str(level));
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidParameter, "cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  Json doc = Json::parse(buffer.str(), nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::InvalidParameter, "'" + path + "' is not valid JSON");
  return doc;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidParameter, "cannot write '" + path + "'");
  out << text << '\n';
}

/// Session state to start a script from: an optional graph file and an
/// optional config file.
inline SessionState initial_state(const std::string& graph_path, const std::string& config_path) {
  SessionState s;
  if (!config_path.empty()) s.config = config_from_json(read_json_file(config_path));
  if (!graph_path.empty()) {
    GraphDocument doc = load_graph_file(graph_path);
    session_detail::fill_missing_positions(doc.graph, doc.missing_positions);
    s.graph = std::move(doc.graph);
  }
  return s;
}

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

inline int run_gen(const SyntheticSpec& spec, const std::string& out_path, Streams io) {
  const Graph g = generate_graph(spec);
  save_graph_file(g, out_path);
  io.out << "wrote " << g.node_count() << " nodes, " << g.link_count() << " links to " << out_path << '\n';
  return 0;
}

inline int run_layout_cmd(const std::string& graph_path, LayoutParams params, const std::string& out_path, Streams io) {
  GraphDocument doc = load_graph_file(graph_path);
  const LayoutState st = run_layout(doc.graph, params);
  save_graph_file(doc.graph, out_path);
  io.out << "layout: " << st.iterations << " iterations, alpha " << st.alpha << ", wrote " << out_path << '\n';
  return 0;
}

inline std::string frame_name(std::uint64_t seq) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06llu.json", static_cast<unsigned long long>(seq));
  return buf;
}

inline int run_replay(const std::string& script, const std::string& graph_path, const std::string& config_path,
                      const std::string& out_dir, std::uint64_t every, Streams io) {
  if (every == 0) throw Error(ErrorCode::InvalidParameter, "--every must be >= 1");
  const auto log = load_command_log(script);
  std::filesystem::create_directories(out_dir);
  Session session(initial_state(graph_path, config_path));
  std::size_t frames = 0;
  std::size_t rejected = 0;
  std::uint64_t last_written = 0;
  for (const auto& c : log) {
    const auto r = session.apply(c, false);
    if (!r.ok) {
      ++rejected;
      spdlog::warn("seq {} rejected: {}: {}", r.seq, to_string(r.code), r.message);
      continue;
    }
    if (r.seq % every == 0) {
      write_text((std::filesystem::path(out_dir) / frame_name(r.seq)).string(), canonical_dump(session.document()));
      last_written = r.seq;
      ++frames;
    }
  }
  const auto last = session.state().applied_seq;
  if (last != last_written) {
    write_text((std::filesystem::path(out_dir) / frame_name(last)).string(), canonical_dump(session.document()));
    ++frames;
  }
  io.out << "replayed " << log.size() << " commands (" << rejected << " rejected), wrote " << frames
         << " frames, hash " << session.hash() << '\n';
  return 0;
}

inline int run_validate(const std::string& script, const std::string& graph_path, const std::string& config_path,
                        Streams io) {
  std::vector<Command> log;
  try {
    log = load_command_log(script);
  } catch (const Error& e) {
    io.err << "invalid script: " << e.what() << '\n';
    return kFailed;
  }
  const SessionState start = initial_state(graph_path, config_path);
  Session session(start);
  std::size_t violations = 0;
  std::size_t rejected = 0;
  for (const auto& c : log) {
    const auto r = session.apply(c, false);
    if (!r.ok) {
      ++rejected;
      io.out << "seq " << r.seq << " rejected: " << to_string(r.code) << ": " << r.message << '\n';
      continue;
    }
    for (const auto& v : check_invariants(session.state())) {
      ++violations;
      io.err << "seq " << r.seq << ": invariant violated: " << v << '\n';
    }
  }
  const std::string first = session.hash();
  const std::string second = state_hash(replay(log, start).state);
  bool ok = violations == 0 && rejected == 0;
  if (first != second) {
    io.err << "replay is not deterministic: " << first << " vs " << second << '\n';
    ok = false;
  }
  try {
    const SessionState restored = restore_text(canonical_dump(session.document()));
    if (!(restored == session.state()) || state_hash(restored) != first) {
      io.err << "snapshot round trip changed the state\n";
      ok = false;
    }
  } catch (const Error& e) {
    io.err << "snapshot round trip failed: " << e.what() << '\n';
    ok = false;
  }
  io.out << log.size() << " commands, " << rejected << " rejected, " << violations << " violations, hash " << first
         << '\n';
  io.out << (ok ? "valid" : "INVALID") << '\n';
  return ok ? 0 : kFailed;
}

inline int run_serve(const std::string& address, unsigned short port, const std::string& graph_path,
                     const std::string& config_path, const std::string& record) {
  ServiceOptions options;
  options.address = address;
  options.port = port;
  if (!record.empty()) options.record_path = record;
  ProbeService service(Session(initial_state(graph_path, config_path)), options);
  service.run_until_signal();
  return 0;
}

}  // namespace cli_detail

/// Entry point for the probekit command line tool.
inline int cli_run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace cli_detail;
  setup_logging();

  CLI::App app{"Multi-focus probe engine: layout, session replay and websocket service"};
  app.require_subcommand(1);

  SyntheticSpec spec;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic player graph");
  gen->add_option("--nodes", spec.nodes, "Node count")->capture_default_str();
  gen->add_option("--links", spec.links, "Link count")->capture_default_str();
  gen->add_option("--attrs", spec.attrs, "Attributes per node")->capture_default_str();
  gen->add_option("--seed", spec.seed, "Random seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output graph file")->required();

  std::string graph_path;
  std::string layout_out;
  LayoutParams layout_params;
  auto* layout = app.add_subcommand("layout", "Run the 3D force layout on a graph file");
  layout->add_option("--graph", graph_path, "Input graph file")->required()->check(CLI::ExistingFile);
  layout->add_option("--seed", layout_params.seed, "Seed for initial positions")->capture_default_str();
  layout->add_option("--iters", layout_params.max_iterations, "Maximum iterations")->capture_default_str();
  layout->add_option("--theta", layout_params.theta, "Barnes-Hut opening angle")->capture_default_str();
  layout->add_option("--out", layout_out, "Output graph file")->required();

  std::string script;
  std::string config_path;
  std::string replay_out;
  std::uint64_t every = 1;
  auto* rep = app.add_subcommand("replay", "Replay a command log and write snapshot frames");
  rep->add_option("--script", script, "Command log (JSON lines)")->required()->check(CLI::ExistingFile);
  rep->add_option("--graph", graph_path, "Initial graph file")->check(CLI::ExistingFile);
  rep->add_option("--config", config_path, "Session config file")->check(CLI::ExistingFile);
  rep->add_option("--out", replay_out, "Output directory")->required();
  rep->add_option("--every", every, "Write a frame every N commands")->capture_default_str();

  auto* val = app.add_subcommand("validate", "Replay a command log checking invariants and determinism");
  val->add_option("--script", script, "Command log (JSON lines)")->required()->check(CLI::ExistingFile);
  val->add_option("--graph", graph_path, "Initial graph file")->check(CLI::ExistingFile);
  val->add_option("--config", config_path, "Session config file")->check(CLI::ExistingFile);

  std::string address = "127.0.0.1";
  unsigned short port = 8080;
  std::string record;
  auto* serve = app.add_subcommand("serve", "Serve a session over websockets");
  serve->add_option("--address", address, "Listen address")->capture_default_str();
  serve->add_option("--port", port, "Listen port")->capture_default_str();
  serve->add_option("--graph", graph_path, "Initial graph file")->check(CLI::ExistingFile);
  serve->add_option("--config", config_path, "Session config file")->check(CLI::ExistingFile);
  serve->add_option("--record", record, "Append accepted commands to this log");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kUsage;
  }

  const Streams io{out, err};
  try {
    if (*gen) return run_gen(spec, gen_out, io);
    if (*layout) return run_layout_cmd(graph_path, layout_params, layout_out, io);
    if (*rep) return run_replay(script, graph_path, config_path, replay_out, every, io);
    if (*val) return run_validate(script, graph_path, config_path, io);
    if (*serve) return run_serve(address, port, graph_path, config_path, record);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailed;
  }
  return kUsage;
}

}  // namespace probekit
