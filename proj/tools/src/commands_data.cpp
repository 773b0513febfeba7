#include <memory>
#include <sstream>

#include "commands.hpp"
#include "spectrasep/cube_io.hpp"
#include "spectrasep/error.hpp"
#include "spectrasep/parallel.hpp"

namespace spectrasep::cli {

Task task_option(const std::string& text) { return parse_task(text); }

Tier tier_option(const std::string& text) {
  if (text == "one_hour" || text == "1h") return Tier::one_hour;
  if (text == "ten_hours" || text == "10h") return Tier::ten_hours;
  throw ValidationError("--tier: unknown tier '" + text + "' (one_hour|ten_hours)");
}

std::string to_csv(const std::function<void(std::ostream&)>& writer) {
  std::ostringstream out;
  writer(out);
  return out.str();
}

FeatureTable load_or_compute_hsi(RunContext& ctx, const CohortDirectory& dir, const std::string& features_csv) {
  if (!features_csv.empty()) {
    ctx.input("features", features_csv);
    return read_feature_csv(features_csv);
  }
  ctx.begin_step("hsi_features");
  return hsi_features(dir, ctx.config().site, ctx.config().feature_config(), ctx.jobs());
}

namespace {

std::optional<std::filesystem::path> optional_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::filesystem::path(s);
}

RegionAnnotation pick_annotation(const std::vector<RegionAnnotation>& rois, const std::string& image_id) {
  if (image_id.empty()) {
    if (rois.size() != 1) {
      throw ValidationError("--image-id is required when the annotation file holds " + std::to_string(rois.size()) +
                            " annotations");
    }
    return rois.front();
  }
  for (const auto& roi : rois) {
    if (roi.image_id == image_id) return roi;
  }
  throw AnnotationError("no annotation for image '" + image_id + "'");
}

void add_reference_options(CLI::App* sub, std::string& white, std::string& dark) {
  sub->add_option("--white", white, "White reference SpecCube (needed for raw counts)")->check(CLI::ExistingFile);
  sub->add_option("--dark", dark, "Dark reference SpecCube (needed for raw counts)")->check(CLI::ExistingFile);
}

struct CalibrateOptions {
  std::string raw, white, dark;
};

void add_calibrate(CLI::App& app, std::vector<Command>& commands) {
  auto o = std::make_shared<CalibrateOptions>();
  auto* sub = app.add_subcommand("calibrate", "Convert raw counts to reflectance");
  sub->add_option("--raw", o->raw, "Raw-count SpecCube")->required()->check(CLI::ExistingFile);
  sub->add_option("--white", o->white, "White reference SpecCube")->required()->check(CLI::ExistingFile);
  sub->add_option("--dark", o->dark, "Dark reference SpecCube")->required()->check(CLI::ExistingFile);
  commands.push_back({sub, [o](RunContext& ctx) {
                        ctx.input("raw", o->raw);
                        ctx.input("white", o->white);
                        ctx.input("dark", o->dark);
                        ctx.begin_step("calibrate");
                        const SpectralCube r = calibrate(load_cube(o->raw), load_cube(o->white), load_cube(o->dark));
                        save_cube(r, ctx.output("reflectance.speccube"));
                      }});
}

struct PreprocessOptions {
  std::string cube, white, dark, annotations, image_id, cohort, site;
  std::size_t size = kModelInputSize;
};

void add_preprocess(CLI::App& app, std::vector<Command>& commands) {
  auto o = std::make_shared<PreprocessOptions>();
  auto* sub = app.add_subcommand("preprocess", "Normalize, crop and rescale cubes to model input tensors");
  auto* cube = sub->add_option("--cube", o->cube, "Cube to preprocess")->check(CLI::ExistingFile);
  add_reference_options(sub, o->white, o->dark);
  sub->add_option("--annotations", o->annotations, "Annotation JSON")->check(CLI::ExistingFile);
  sub->add_option("--image-id", o->image_id, "Annotation to use");
  auto* cohort = sub->add_option("--cohort", o->cohort, "Cohort directory (all images of --site)")
                     ->check(CLI::ExistingDirectory);
  sub->add_option("--site", o->site, "Site for --cohort (default: config site)");
  sub->add_option("--size", o->size, "Output side length in pixels")->capture_default_str()->check(CLI::PositiveNumber);
  cube->excludes(cohort);
  commands.push_back({sub, [o](RunContext& ctx) {
                        if (!o->cohort.empty()) {
                          ctx.input("cohort", o->cohort);
                          const CohortDirectory dir = CohortDirectory::open(o->cohort);
                          const Site site = o->site.empty() ? ctx.config().site : parse_site(o->site);
                          std::vector<const CohortImageEntry*> entries;
                          std::vector<std::pair<std::filesystem::path, std::filesystem::path>> paths;
                          nlohmann::json index = nlohmann::json::array();
                          for (const auto& e : dir.images) {
                            if (e.site != site) continue;
                            const std::string tensor = "tensors/" + e.image_id + ".speccube";
                            const std::string mask = "masks/" + e.image_id + ".pgm";
                            entries.push_back(&e);
                            paths.emplace_back(ctx.output(tensor), ctx.output(mask));
                            index.push_back({{"image_id", e.image_id},
                                             {"patient_id", e.patient_id},
                                             {"site", to_string(e.site)},
                                             {"tensor", tensor},
                                             {"mask", mask}});
                          }
                          ctx.begin_step("preprocess");
                          parallel_for(entries.size(), ctx.jobs(), [&](std::size_t i) {
                            const auto& e = *entries[i];
                            const PreprocessedSample s = preprocess(load_reflectance(e.cube, e.white, e.dark),
                                                                    dir.annotation_for(e.image_id), o->size);
                            save_cube(s.tensor, paths[i].first);
                            save_mask_pgm(s.mask, paths[i].second);
                          });
                          ctx.write_json("preprocess_index.json", index);
                          return;
                        }
                        if (o->cube.empty() || o->annotations.empty()) {
                          throw ValidationError("preprocess needs --cube and --annotations, or --cohort");
                        }
                        ctx.input("cube", o->cube);
                        ctx.input("annotations", o->annotations);
                        const RegionAnnotation roi = pick_annotation(load_annotations(o->annotations), o->image_id);
                        ctx.begin_step("preprocess");
                        const PreprocessedSample s =
                            preprocess(load_reflectance(o->cube, optional_path(o->white), optional_path(o->dark)), roi,
                                       o->size);
                        save_cube(s.tensor, ctx.output(roi.image_id + ".tensor.speccube"));
                        save_mask_pgm(s.mask, ctx.output(roi.image_id + ".mask.pgm"));
                      }});
}

struct IndicesOptions {
  std::string cube, white, dark, annotations, image_id;
  bool maps = false;
};

void add_indices(CLI::App& app, std::vector<Command>& commands) {
  auto o = std::make_shared<IndicesOptions>();
  auto* sub = app.add_subcommand("indices", "Compute tissue index maps and ROI statistics");
  sub->add_option("--cube", o->cube, "Raw or reflectance SpecCube")->required()->check(CLI::ExistingFile);
  add_reference_options(sub, o->white, o->dark);
  sub->add_option("--annotations", o->annotations, "Annotation JSON (default: whole image)")
      ->check(CLI::ExistingFile);
  sub->add_option("--image-id", o->image_id, "Annotation to use");
  sub->add_flag("--maps", o->maps, "Also write per-pixel index maps as CSV grids");
  commands.push_back({sub, [o](RunContext& ctx) {
                        ctx.input("cube", o->cube);
                        const SpectralCube refl =
                            load_reflectance(o->cube, optional_path(o->white), optional_path(o->dark));
                        ctx.begin_step("indices");
                        SpectralCube cube;
                        Mask mask;
                        nlohmann::json summary;
                        if (!o->annotations.empty()) {
                          ctx.input("annotations", o->annotations);
                          const RegionAnnotation roi =
                              pick_annotation(load_annotations(o->annotations), o->image_id);
                          RoiCrop crop = apply_roi(refl, roi);
                          cube = l1_normalize(crop.cube);
                          mask = std::move(crop.mask);
                          summary["image_id"] = roi.image_id;
                          summary["region"] = "roi";
                        } else {
                          cube = l1_normalize(refl);
                          mask = Mask(cube.width(), cube.height(), true);
                          summary["region"] = "full_image";
                        }
                        summary["pixels"] = mask.count();
                        nlohmann::json values = nlohmann::json::object();
                        for (const auto& spec : ctx.config().indices) {
                          const IndexMap map = compute_index(cube, spec, mask);
                          values[spec.name] = {{"median", roi_statistic(map, mask, RoiStatistic::median)},
                                               {"mean", roi_statistic(map, mask, RoiStatistic::mean)}};
                          if (!o->maps) continue;
                          std::ostringstream grid;
                          for (std::size_t y = 0; y < map.height; ++y) {
                            for (std::size_t x = 0; x < map.width; ++x) {
                              if (x > 0) grid << ',';
                              const double v = map.at(x, y);
                              if (!std::isnan(v)) grid << csv::format_number(v);
                            }
                            grid << '\n';
                          }
                          ctx.write_text("index_" + spec.name + ".csv", grid.str());
                        }
                        summary["indices"] = std::move(values);
                        ctx.write_json("indices.json", summary);
                      }});
}

struct FeaturesOptions {
  std::string cohort;
};

void add_features(CLI::App& app, std::vector<Command>& commands) {
  auto o = std::make_shared<FeaturesOptions>();
  auto* sub = app.add_subcommand("features", "Extract per-patient HSI feature vectors from a cohort");
  sub->add_option("--cohort", o->cohort, "Cohort directory")->required()->check(CLI::ExistingDirectory);
  commands.push_back({sub, [o](RunContext& ctx) {
                        ctx.input("cohort", o->cohort);
                        const CohortDirectory dir = CohortDirectory::open(o->cohort);
                        const FeatureTable table = load_or_compute_hsi(ctx, dir, "");
                        ctx.write_text("features.csv", to_csv([&](std::ostream& out) { write_feature_csv(table, out); }));
                        ctx.write_json("feature_dictionary.json", feature_dictionary(table.feature_names()));
                      }});
}

struct ScoresOptions {
  std::string cohort, clinical, labels, table = "all";
};

void add_scores(CLI::App& app, std::vector<Command>& commands) {
  auto o = std::make_shared<ScoresOptions>();
  auto* sub = app.add_subcommand("scores", "Evaluate clinical scores (qSOFA, SIRS, NEWS, SOFA, APACHE II, VIS)");
  auto* cohort = sub->add_option("--cohort", o->cohort, "Cohort directory")->check(CLI::ExistingDirectory);
  auto* clinical = sub->add_option("--clinical", o->clinical, "Clinical CSV")->check(CLI::ExistingFile);
  sub->add_option("--labels", o->labels, "Labels CSV for --clinical")->check(CLI::ExistingFile);
  sub->add_option("--table", o->table, "Score name, 'vis', or 'all'")->capture_default_str();
  cohort->excludes(clinical);
  commands.push_back({sub, [o](RunContext& ctx) {
                        const auto& dict = ctx.config().dictionary;
                        Cohort cohort;
                        if (!o->cohort.empty()) {
                          ctx.input("cohort", o->cohort);
                          cohort = CohortDirectory::open(o->cohort).load_cohort(dict);
                        } else if (!o->clinical.empty()) {
                          ctx.input("clinical", o->clinical);
                          cohort = ingest_csv(o->clinical, dict);
                          if (!o->labels.empty()) merge_labels(cohort, std::filesystem::path(o->labels));
                        } else {
                          throw ValidationError("scores needs --cohort or --clinical");
                        }
                        std::vector<std::string> names;
                        if (o->table == "all") {
                          names = standard_score_names();
                          names.emplace_back("vis");
                        } else {
                          names.push_back(o->table);
                        }
                        std::vector<ScoreTable> tables;
                        for (const auto& n : names) {
                          if (n != "vis") tables.push_back(ctx.config().score_table(n));
                        }
                        ctx.begin_step("scores");
                        std::ostringstream out;
                        csv::write_row(out, {"patient_id", "score_name", "value", "valid"});
                        for (const auto& rec : cohort.records) {
                          for (const auto& table : tables) {
                            const ScoreResult r = evaluate_score(rec, table);
                            csv::write_row(out, {r.patient_id, r.score_name, csv::format_number(r.value),
                                                 r.valid ? "true" : "false"});
                          }
                          if (std::find(names.begin(), names.end(), "vis") != names.end()) {
                            bool complete = true;
                            for (const auto& [agent, w] : ctx.config().vis_weights) {
                              if (!rec.values[dict.index_of(agent)]) complete = false;
                            }
                            const double v = vasoactive_inotropic_score(rec, dict, ctx.config().vis_weights, true);
                            csv::write_row(out, {rec.patient_id, "vis", csv::format_number(v),
                                                 complete ? "true" : "false"});
                          }
                        }
                        ctx.write_text("scores.csv", out.str());
                      }});
}

struct StatsOptions {
  std::string cohort, grouping = "sepsis", features;
};

void add_stats(CLI::App& app, std::vector<Command>& commands) {
  auto o = std::make_shared<StatsOptions>();
  auto* sub = app.add_subcommand("stats", "Welch tests of ROI index values and descriptive statistics");
  sub->add_option("--cohort", o->cohort, "Cohort directory")->required()->check(CLI::ExistingDirectory);
  sub->add_option("--grouping", o->grouping, "sepsis or mortality")->capture_default_str();
  sub->add_option("--features", o->features, "Precomputed features.csv")->check(CLI::ExistingFile);
  commands.push_back({sub, [o](RunContext& ctx) {
                        const Task grouping = task_option(o->grouping);
                        ctx.input("cohort", o->cohort);
                        const CohortDirectory dir = CohortDirectory::open(o->cohort);
                        const Cohort cohort = dir.load_cohort(ctx.config().dictionary);
                        const FeatureTable hsi = load_or_compute_hsi(ctx, dir, o->features);
                        ctx.begin_step("stats");
                        std::vector<std::string> names;
                        for (const auto& spec : ctx.config().indices) names.push_back(spec.name);
                        const GroupTestReport report = index_group_tests(hsi, cohort, grouping, names);
                        ctx.write_json("stats.json", report.to_json());

                        std::ostringstream box;
                        csv::write_row(box, {"index", "group", "n", "q1", "median", "q3", "whisker_low",
                                             "whisker_high", "mean", "outliers"});
                        auto row = [&](const std::string& index, std::string_view group, const BoxplotStats& b,
                                       std::size_t n) {
                          std::string outliers;
                          for (double v : b.outliers) outliers += (outliers.empty() ? "" : ";") + csv::format_number(v);
                          csv::write_row(box, {index, std::string(group), std::to_string(n), csv::format_number(b.q1),
                                               csv::format_number(b.median), csv::format_number(b.q3),
                                               csv::format_number(b.whisker_low), csv::format_number(b.whisker_high),
                                               csv::format_number(b.mean), outliers});
                        };
                        const Cohort filtered = cohort_filter(cohort, grouping);
                        const auto labels = binary_labels(filtered, grouping);
                        std::size_t n_pos = 0;
                        std::size_t n_neg = 0;
                        for (std::size_t i = 0; i < filtered.records.size(); ++i) {
                          const auto& id = filtered.records[i].patient_id;
                          if (std::find(hsi.row_ids().begin(), hsi.row_ids().end(), id) != hsi.row_ids().end()) {
                            (labels[i] == 1 ? n_pos : n_neg) += 1;
                          }
                        }
                        for (const auto& t : report.tests) {
                          row(t.index_name, positive_class_name(grouping), t.positive_box, n_pos);
                          row(t.index_name, negative_class_name(grouping), t.negative_box, n_neg);
                        }
                        ctx.write_text("boxplot.csv", box.str());
                        ctx.write_json("descriptive.json",
                                       descriptive_stats(cohort, grouping).to_json(ctx.config().dictionary));
                      }});
}

struct SynthOptions {
  std::size_t n = 160;
  std::string size = "64";
  double effect = 1.0;
  std::vector<std::string> sites{"palm"};
  std::string synth_config;
  std::string effect_task = "sepsis";
};

std::pair<std::size_t, std::size_t> parse_size(const std::string& text) {
  try {
    const auto x = text.find('x');
    if (x == std::string::npos) {
      const auto s = std::stoul(text);
      return {s, s};
    }
    return {std::stoul(text.substr(0, x)), std::stoul(text.substr(x + 1))};
  } catch (const std::exception&) {
    throw ValidationError("--size: expected N or WxH, got '" + text + "'");
  }
}

void add_synth(CLI::App& app, std::vector<Command>& commands) {
  auto o = std::make_shared<SynthOptions>();
  auto* sub = app.add_subcommand("synth", "Generate a synthetic cohort with planted class effects");
  auto* n = sub->add_option("--n", o->n, "Number of patients")->capture_default_str();
  auto* size = sub->add_option("--size", o->size, "Image size N or WxH")->capture_default_str();
  auto* effect = sub->add_option("--effect", o->effect, "Multiplier on the default planted effects (0 = no signal)")
                     ->capture_default_str()
                     ->check(CLI::NonNegativeNumber);
  auto* sites = sub->add_option("--sites", o->sites, "Imaged sites (palm, finger)")->delimiter(',');
  auto* task = sub->add_option("--effect-task", o->effect_task, "Task whose positive class carries the effects");
  sub->add_option("--synth-config", o->synth_config, "SynthConfig JSON; flags override its fields")
      ->check(CLI::ExistingFile);
  commands.push_back({sub, [o, n, size, effect, sites, task](RunContext& ctx) {
                        SynthConfig cfg = SynthConfig::defaults();
                        if (!o->synth_config.empty()) {
                          ctx.input("synth_config", o->synth_config);
                          cfg = SynthConfig::from_json(read_json_file(o->synth_config));
                        }
                        if (n->count() > 0 || o->synth_config.empty()) cfg.n_patients = o->n;
                        if (size->count() > 0 || o->synth_config.empty()) {
                          std::tie(cfg.width, cfg.height) = parse_size(o->size);
                        }
                        if (effect->count() > 0) cfg = cfg.scaled_effects(o->effect);
                        if (sites->count() > 0) {
                          cfg.sites.clear();
                          for (const auto& s : o->sites) cfg.sites.push_back(parse_site(s));
                        }
                        if (task->count() > 0) cfg.effect_task = task_option(o->effect_task);
                        cfg.seed = ctx.seed();
                        ctx.begin_step("generate");
                        const SynthCohort cohort = generate(cfg, ctx.config().indices, ctx.config().dictionary);
                        ctx.begin_step("write");
                        write_cohort(cohort, ctx.out_dir(), ctx.jobs());
                        for (const char* f : {"images.json", "annotations.json", "clinical.csv", "labels.csv",
                                              "synth_manifest.json", "references/white.speccube",
                                              "references/dark.speccube"}) {
                          ctx.output(f);
                        }
                        for (const auto& image : cohort.images) ctx.output("cubes/" + image.image_id + ".speccube");
                      }});
}

}  // namespace

void add_data_commands(CLI::App& app, std::vector<Command>& commands) {
  add_calibrate(app, commands);
  add_preprocess(app, commands);
  add_indices(app, commands);
  add_features(app, commands);
  add_scores(app, commands);
  add_stats(app, commands);
  add_synth(app, commands);
}

}  // namespace spectrasep::cli
