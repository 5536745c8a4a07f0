#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "reid/error.hpp"
#include "reid/eval/reports.hpp"
#include "reid/eval/synth.hpp"
#include "reid/eval/topk.hpp"
#include "reid/gallery.hpp"
#include "reid/ingest/feed.hpp"
#include "reid/match/snapshot.hpp"
#include "reid/registry/registry.hpp"
#include "reid/service/server.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw reid::Error(reid::ErrorCode::NotFound, "cannot open " + path);
  auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw reid::Error(reid::ErrorCode::ValidationError, path + " is not valid JSON");
  return j;
}

void write_json(const std::string& path, const json& j) {
  if (path == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw reid::Error(reid::ErrorCode::StorageFault, "cannot write " + path);
  out << j.dump(2) << "\n";
}

const reid::seek::Schema& schema_for(const std::string& path, std::unique_ptr<reid::seek::Schema>& holder) {
  if (path.empty()) return reid::seek::Schema::builtin();
  holder = std::make_unique<reid::seek::Schema>(reid::seek::Schema::load(path));
  return *holder;
}

struct FusionFlags {
  double curv_coefficient = 0.1;
  std::size_t lnbnn_k = 5;
  std::string side_policy = "merged";

  void add(CLI::App* app) {
    app->add_option("--curv-coefficient", curv_coefficient, "weight of contour evidence in the fused score")
        ->capture_default_str();
    app->add_option("--lnbnn-k", lnbnn_k, "neighbors per query descriptor")->capture_default_str();
    app->add_option("--side-policy", side_policy, "merged or per_side")
        ->check(CLI::IsMember({"merged", "per_side"}))
        ->capture_default_str();
  }

  reid::match::FusionConfig config() const {
    return {curv_coefficient, lnbnn_k,
            side_policy == "per_side" ? reid::match::SidePolicy::PerSide : reid::match::SidePolicy::Merged};
  }
};

void print_topk(const reid::eval::TopkResult& r, bool as_json) {
  if (as_json) {
    json acc = json::object();
    for (const auto& [m, values] : r.accuracy) acc[std::string(reid::eval::to_string(m))] = values;
    std::cout << json{{"individuals", r.individuals}, {"queries", r.queries}, {"ks", r.ks}, {"accuracy", acc}}.dump(2)
              << "\n";
    return;
  }
  std::cout << fmt::format("{} individuals, {} queries\n", r.individuals, r.queries);
  std::cout << fmt::format("{:<8}", "method");
  for (auto k : r.ks) std::cout << fmt::format("{:>9}", fmt::format("top-{}", k));
  std::cout << "\n";
  for (const auto& [m, values] : r.accuracy) {
    std::cout << fmt::format("{:<8}", reid::eval::to_string(m));
    for (double v : values) std::cout << fmt::format("{:>9.3f}", v);
    std::cout << "\n";
  }
}

void print_report(const reid::eval::SeekReport& r, bool as_json) {
  using reid::seek::kAllSlots;
  using reid::seek::index_of;
  using reid::seek::slot_name;
  if (as_json) {
    json freq = json::object();
    for (auto s : kAllSlots) freq[std::string(slot_name(s))] = r.frequency[index_of(s)];
    json out{{"codes", r.codes}, {"frequency", freq}, {"agreement_groups", r.agreement_groups}};
    if (r.agreement) {
      json agree = json::object();
      for (auto s : kAllSlots) agree[std::string(slot_name(s))] = (*r.agreement)[index_of(s)];
      out["agreement"] = agree;
    } else {
      out["agreement"] = nullptr;
    }
    std::cout << out.dump(2) << "\n";
    return;
  }
  std::cout << fmt::format("{} coded sightings\n\nattribute frequency\n", r.codes);
  for (auto s : kAllSlots) {
    std::cout << fmt::format("  {:<20}", slot_name(s));
    for (const auto& [value, f] : r.frequency[index_of(s)]) std::cout << fmt::format(" {}={:.3f}", value, f);
    std::cout << "\n";
  }
  if (!r.agreement) {
    std::cout << "\nagreement: no individual has two coded sightings\n";
    return;
  }
  std::cout << fmt::format("\nagreement over {} individuals\n", r.agreement_groups);
  for (auto s : kAllSlots) std::cout << fmt::format("  {:<20} {:.3f}\n", slot_name(s), (*r.agreement)[index_of(s)]);
}

std::vector<std::size_t> parse_ks(const std::string& text) {
  std::vector<std::size_t> ks;
  std::stringstream in(text);
  for (std::string part; std::getline(in, part, ',');) {
    if (part.empty()) continue;
    ks.push_back(std::stoul(part));
    if (ks.back() == 0) throw reid::Error(reid::ErrorCode::ValidationError, "k must be positive");
  }
  return ks;
}

reid::service::ApiServer* g_server = nullptr;
reid::ingest::MockFeedServer* g_feed = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
  if (g_feed) g_feed->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sighting registry, matching and evaluation tools"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error")->capture_default_str();
  std::string schema_path;
  app.add_option("--schema", schema_path, "SEEK schema file (builtin when omitted)");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic population dump");
  reid::eval::SynthOptions synth_opts;
  std::string synth_out = "-";
  synth->add_option("--individuals", synth_opts.individuals)->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--sightings", synth_opts.sightings_each, "sightings per individual")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  synth->add_option("--flip", synth_opts.code_flip_prob, "per-slot code flip probability")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--jitter", synth_opts.contour_jitter, "contour jitter, fraction of arc length")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", synth_opts.seed)->capture_default_str();
  synth->add_option("-o,--out", synth_out, "output dump, - for stdout")->capture_default_str();

  // schema
  auto* schema_cmd = app.add_subcommand("schema", "print the active SEEK schema");

  // eval
  auto* eval = app.add_subcommand("eval", "held-out top-k accuracy of seek, curv and hybrid ranking");
  std::string eval_dump;
  std::size_t cpi = 2;
  std::string eval_ks = "1,5,10,15";
  std::vector<std::string> eval_methods{"seek", "curv", "hybrid"};
  std::uint64_t eval_seed = 1;
  bool eval_json = false;
  FusionFlags eval_fusion;
  eval->add_option("dump", eval_dump, "registry dump")->required();
  eval->add_option("--codes-per-individual", cpi, "gallery sightings per individual")
      ->capture_default_str()
      ->check(CLI::Range(1, 2));
  eval->add_option("--k", eval_ks, "comma-separated k values")->capture_default_str();
  eval->add_option("--methods", eval_methods)->delimiter(',')->check(CLI::IsMember({"seek", "curv", "hybrid"}));
  eval->add_option("--seed", eval_seed, "seed of the gallery/query split")->capture_default_str();
  eval->add_flag("--json", eval_json);
  eval_fusion.add(eval);

  // report
  auto* report = app.add_subcommand("report", "SEEK attribute frequencies and agreement");
  std::string report_dump;
  bool report_json = false;
  report->add_option("dump", report_dump, "registry dump")->required();
  report->add_flag("--json", report_json);

  // import / export
  auto* import = app.add_subcommand("import", "load a dump into an empty registry database");
  std::string import_dump, import_db, import_actor = "cli";
  import->add_option("dump", import_dump)->required();
  import->add_option("--db", import_db, "SQLite registry file")->required();
  import->add_option("--actor", import_actor)->capture_default_str();

  auto* exporter = app.add_subcommand("export", "write a registry database as a dump");
  std::string export_db, export_out = "-";
  exporter->add_option("--db", export_db, "SQLite registry file")->required();
  exporter->add_option("-o,--out", export_out)->capture_default_str();

  // reindex
  auto* reindex = app.add_subcommand("reindex", "build the match index from a registry and write a snapshot");
  std::string reindex_db, reindex_dump, reindex_out;
  reindex->add_option("--db", reindex_db, "SQLite registry file");
  reindex->add_option("--dump", reindex_dump, "registry dump");
  reindex->add_option("-o,--out", reindex_out, "snapshot file")->required();

  // match
  auto* matcher = app.add_subcommand("match", "rank the gallery for one sighting offline");
  std::string match_dump, match_snapshot;
  std::int64_t match_sighting = 0;
  std::size_t match_top_k = 15;
  bool match_json = false;
  FusionFlags match_fusion;
  matcher->add_option("dump", match_dump, "registry dump")->required();
  matcher->add_option("--sighting", match_sighting, "individual sighting id")->required();
  matcher->add_option("--snapshot", match_snapshot, "index snapshot; built from the dump when omitted");
  matcher->add_option("--top-k", match_top_k)->capture_default_str()->check(CLI::PositiveNumber);
  matcher->add_flag("--json", match_json);
  match_fusion.add(matcher);

  // serve
  auto* serve = app.add_subcommand("serve", "run the HTTP API");
  std::string serve_config;
  serve->add_option("--config", serve_config, "service config JSON")->required();

  // mock feed
  auto* mock = app.add_subcommand("mock-feed", "serve fixture events over the feed wire format");
  std::string mock_fixtures, mock_host = "127.0.0.1", mock_token;
  int mock_port = 8090;
  mock->add_option("fixtures", mock_fixtures, "JSON array of event records")->required();
  mock->add_option("--host", mock_host)->capture_default_str();
  mock->add_option("--port", mock_port)->capture_default_str();
  mock->add_option("--token", mock_token, "required bearer token");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    std::unique_ptr<reid::seek::Schema> schema_holder;
    const auto& schema = schema_for(schema_path, schema_holder);

    if (*schema_cmd) {
      std::cout << schema.to_json().dump(2) << "\n";
    } else if (*synth) {
      write_json(synth_out, reid::registry::to_dump(reid::eval::synth_population(synth_opts, schema)));
    } else if (*eval) {
      const auto data = reid::registry::data_from_dump(read_json(eval_dump), schema);
      reid::eval::Protocol protocol;
      protocol.codes_per_individual = cpi;
      protocol.ks = parse_ks(eval_ks);
      protocol.seed = eval_seed;
      protocol.methods.clear();
      for (const auto& m : eval_methods) protocol.methods.push_back(reid::eval::method_from_string(m));
      print_topk(reid::eval::eval_topk(data, protocol, eval_fusion.config()), eval_json);
    } else if (*report) {
      print_report(reid::eval::seek_reports(reid::registry::data_from_dump(read_json(report_dump), schema)),
                   report_json);
    } else if (*import) {
      reid::registry::Registry reg({import_db, {}, &schema});
      reg.import_data(reid::registry::data_from_dump(read_json(import_dump), schema), import_actor);
      std::cout << fmt::format("imported; registry version {}\n", reg.version());
    } else if (*exporter) {
      if (!fs::exists(export_db)) throw reid::Error(reid::ErrorCode::NotFound, "no registry at " + export_db);
      reid::registry::Registry reg({export_db, {}, &schema});
      write_json(export_out, reid::registry::to_dump(reg.data(), reg.audit()));
    } else if (*reindex) {
      if (reindex_db.empty() == reindex_dump.empty()) {
        throw reid::Error(reid::ErrorCode::ValidationError, "give exactly one of --db and --dump");
      }
      reid::registry::RegistryData data;
      if (!reindex_dump.empty()) {
        data = reid::registry::data_from_dump(read_json(reindex_dump), schema);
      } else {
        if (!fs::exists(reindex_db)) throw reid::Error(reid::ErrorCode::NotFound, "no registry at " + reindex_db);
        reid::registry::Registry reg({reindex_db, {}, &schema});
        data = reg.data();
      }
      const auto gallery = reid::build_gallery(data, {});
      const auto index = gallery.build_index(0, data.schema_version);
      if (!index) throw reid::Error(reid::ErrorCode::EmptyGallery, "no confirmed contour to index");
      reid::match::write_snapshot(reindex_out, *index);
      std::cout << fmt::format("{} individuals, {} descriptors -> {}\n", gallery.entries.size(), index->size(),
                               reindex_out);
    } else if (*matcher) {
      const auto data = reid::registry::data_from_dump(read_json(match_dump), schema);
      const auto gallery = reid::build_gallery(data, {});
      std::optional<reid::match::DescriptorIndex<double>> index;
      if (!match_snapshot.empty()) {
        index = reid::match::read_snapshot(fs::path(match_snapshot));
      } else {
        index = gallery.build_index(0, data.schema_version);
      }
      const auto query = reid::make_query(data.sighting(match_sighting), {});
      const auto ranked =
          reid::match::rank_candidates(query, gallery.entries, index ? &*index : nullptr, match_fusion.config());
      if (match_json) {
        std::cout << json{{"sighting_id", match_sighting},
                          {"index_generation", index ? index->generation() : 0},
                          {"matches", reid::service::matches_to_json(ranked, match_top_k)}}
                         .dump(2)
                  << "\n";
      } else {
        std::cout << fmt::format("{:>4} {:>10} {:>12} {:>14} {:>12}\n", "rank", "individual", "seek", "contour",
                                 "fused");
        for (std::size_t i = 0; i < ranked.size() && i < match_top_k; ++i) {
          const auto& m = ranked[i];
          std::cout << fmt::format("{:>4} {:>10} {:>12.6f} {:>14.6f} {:>12.6f}\n", m.rank, m.individual,
                                   m.seek_distance, m.contour_score, m.fused_score);
        }
      }
    } else if (*serve) {
      auto cfg = reid::service::load_config(serve_config);
      if (!schema_path.empty()) cfg.schema_path = schema_path;
      reid::service::ApiServer server(cfg);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      spdlog::set_level(std::min(spdlog::get_level(), spdlog::level::info));
      server.run();
    } else if (*mock) {
      reid::ingest::MockFeedServer feed(reid::ingest::load_fixtures(mock_fixtures), mock_token);
      g_feed = &feed;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << fmt::format("mock feed on http://{}:{}{}\n", mock_host, mock_port, reid::ingest::kEventsPath);
      feed.run(mock_host, mock_port);
    }
  } catch (const reid::Error& e) {
    std::cerr << fmt::format("error [{}]: {}\n", reid::to_string(e.code()), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
