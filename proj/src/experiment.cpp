#include "crowd_al/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "crowd_al/active.hpp"
#include "crowd_al/error.hpp"

namespace crowd_al {

using nlohmann::json;

namespace {

// Stream keys for derive_seed.
constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kCenterStream = 2;
constexpr std::uint64_t kAnnotatorStream = 3;
constexpr std::uint64_t kSelectionStream = 4;
constexpr std::uint64_t kScaleStream = 5;
constexpr std::uint64_t kNoiseStream = 0x1000;

constexpr std::size_t kValidationFolds = 5;

struct Participant {
  std::size_t id = 0;
  double effort = 0.0;
};

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  return order;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> ids) {
  Matrix out(static_cast<Eigen::Index>(ids.size()), m.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(ids[i]));
  }
  return out;
}

Vector gather(const Vector& v, std::span<const std::size_t> ids) {
  Vector out(static_cast<Eigen::Index>(ids.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = v[static_cast<Eigen::Index>(ids[i])];
  }
  return out;
}

// Single noiseless source: used only to rank candidate transform scales.
// Mean k-fold RMSE of a single noiseless source fitted on the other folds.
double validation_rmse(const Matrix& features, const Vector& targets, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(features.rows());
  const auto order = seeded_permutation(n, seed);
  const std::size_t folds = std::min(kValidationFolds, n);
  const std::vector<PrecisionPosterior> priors(1);

  double total = 0.0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t lo = f * n / folds, hi = (f + 1) * n / folds;
    CrowdDataset data(static_cast<std::size_t>(features.cols()), 1);
    for (std::size_t k = 0; k < n; ++k) {
      if (k >= lo && k < hi) continue;
      const auto i = static_cast<Eigen::Index>(order[k]);
      data.add_label(data.add_instance(features.row(i).transpose()), 0, targets[i]);
    }
    const auto fit = fit_variational(data, WeightPosterior::standard(data.dim()), priors);

    Vector predicted(static_cast<Eigen::Index>(hi - lo)), truth(static_cast<Eigen::Index>(hi - lo));
    for (std::size_t k = lo; k < hi; ++k) {
      const auto i = static_cast<Eigen::Index>(order[k]);
      predicted[static_cast<Eigen::Index>(k - lo)] = features.row(i).dot(fit.weights.mean);
      truth[static_cast<Eigen::Index>(k - lo)] = targets[i];
    }
    total += rmse(predicted, truth);
  }
  return total / static_cast<double>(folds);
}

std::vector<AnnotatorProfile> build_annotators(const ExperimentConfig& config, std::uint64_t seed) {
  if (config.strategy == Strategy::single_source) {
    AnnotatorProfile p;
    p.id = 0;
    p.best_precision = 1.0 / (config.single_source_sigma * config.single_source_sigma);
    return {p};
  }
  auto profiles = make_annotators(config.annotators.m, config.annotators.good,
                                  config.annotators.interval_good, config.annotators.interval_bad,
                                  derive_seed(seed, kAnnotatorStream));
  if (config.strategic.enabled) {
    const auto cost = CostFunction::make(config.strategic.cost_kind, config.strategic.a,
                                         config.strategic.b, config.strategic.knee);
    for (auto& p : profiles) {
      p.cost = cost;
      p.strategic = true;
    }
  }
  return profiles;
}

// Efforts are committed once, before any labeling.
std::vector<Participant> commit_efforts(const std::vector<AnnotatorProfile>& profiles,
                                        const ExperimentConfig& config) {
  std::vector<Participant> out;
  for (const auto& p : profiles) {
    const auto choice = optimal_effort(p, config.scheme, config.strategic.grid);
    if (choice.participates) out.push_back({p.id, choice.effort});
  }
  if (out.empty()) throw InvalidInput("no annotator participates under the payment scheme");
  return out;
}

double noisy_label(const AnnotatorProfile& profile, double truth, double effort,
                   std::uint64_t seed, std::size_t row_id) {
  Rng rng(derive_seed(seed, kNoiseStream + profile.id, row_id));
  return sample_label(profile, truth, effort, rng);
}

double test_rmse(const PreparedSplit& split, const WeightPosterior& weights) {
  return rmse(split.test * weights.mean, split.test_targets);
}

RepetitionSummary run_repetition(const ExperimentConfig& config, const RawDataset& raw,
                                 std::size_t rep, std::vector<RoundRecord>& records) {
  const std::uint64_t seed = config.base_seed + rep;
  const PreparedSplit split = prepare_split(raw, config, seed);
  const auto profiles = build_annotators(config, seed);
  const auto participants = commit_efforts(profiles, config);
  const std::size_t arms = participants.size();
  const std::size_t n_train = split.train_ids.size();
  const std::size_t dim = static_cast<std::size_t>(split.train.cols());

  CrowdDataset data(dim, arms);
  for (std::size_t i = 0; i < n_train; ++i) {
    data.add_instance(split.train.row(static_cast<Eigen::Index>(i)).transpose());
  }

  auto label_for = [&](std::size_t arm, std::size_t pos) {
    const Participant& who = participants[arm];
    return noisy_label(profiles[who.id], split.train_targets[static_cast<Eigen::Index>(pos)],
                       who.effort, seed, split.train_ids[pos]);
  };

  const std::size_t seed_pool = std::min(config.seed_pool_size, n_train);
  for (std::size_t pos = 0; pos < seed_pool; ++pos) {
    for (std::size_t arm = 0; arm < arms; ++arm) data.add_label(pos, arm, label_for(arm, pos));
  }
  std::vector<std::size_t> pool;
  for (std::size_t pos = seed_pool; pos < n_train; ++pos) pool.push_back(pos);

  const WeightPosterior weight_prior = WeightPosterior::standard(dim);
  const std::vector<PrecisionPosterior> precision_priors(arms);
  VariationalOptions initial_opts;
  initial_opts.tolerance = config.tolerance;
  initial_opts.max_sweeps = config.initial_sweeps;
  initial_opts.uncorrected_gamma_update = config.uncorrected_gamma_update;
  VariationalOptions round_opts = initial_opts;
  round_opts.max_sweeps = config.round_sweeps;

  FitResult fit = fit_variational(data, weight_prior, precision_priors, initial_opts);

  BanditConfig bandit_config;
  bandit_config.u = config.u ? *config.u
                             : moment_bound_from_sigma(config.sigma_max
                                                           ? *config.sigma_max
                                                           : (config.strategy == Strategy::single_source
                                                                  ? config.single_source_sigma
                                                                  : config.annotators.interval_bad.hi));
  bandit_config.policy = config.delta_policy;
  bandit_config.horizon = std::max<std::size_t>(seed_pool * arms + config.budget, 2);
  BanditState bandit(arms, bandit_config);
  for (std::size_t pos = 0; pos < seed_pool; ++pos) {
    const Vector x = data.instance(pos);
    for (std::size_t arm = 0; arm < arms; ++arm) {
      const double r = *data.label(pos, arm) - x.dot(fit.weights.mean);
      bandit.record(arm, r * r);
    }
  }

  std::vector<double> efforts;
  for (const auto& p : participants) efforts.push_back(p.effort);
  RegretLedger ledger(efforts);

  RepetitionSummary summary;
  summary.rep = rep;
  summary.participants = arms;
  summary.initial_rmse = test_rmse(split, fit.weights);
  summary.final_rmse = summary.initial_rmse;

  RoundRecord baseline;
  baseline.rep = rep;
  baseline.round = 0;
  baseline.rmse = summary.initial_rmse;
  baseline.discarded = bandit.discarded();
  records.push_back(baseline);

  Rng selector(derive_seed(seed, kSelectionStream));
  double paid = 0.0;
  for (std::size_t round = 1; round <= config.budget; ++round) {
    if (pool.empty()) {
      summary.truncated = true;
      break;
    }

    std::size_t slot = 0;
    if (config.strategy == Strategy::random) {
      slot = std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(selector);
    } else {
      std::vector<PoolEntry> entries;
      entries.reserve(pool.size());
      for (std::size_t pos : pool) entries.push_back({pos, data.instance(pos)});
      const std::size_t chosen = select_instance(entries, fit.weights);
      slot = static_cast<std::size_t>(std::find(pool.begin(), pool.end(), chosen) - pool.begin());
    }
    const std::size_t pos = pool[slot];
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(slot));

    std::size_t arm = 0;
    switch (config.strategy) {
      case Strategy::robust_ucb:
        arm = bandit.select();
        break;
      case Strategy::random:
      case Strategy::instance_only:
        arm = std::uniform_int_distribution<std::size_t>(0, arms - 1)(selector);
        break;
      case Strategy::single_source:
        arm = 0;
        break;
    }

    const double y = label_for(arm, pos);
    data.add_label(pos, arm, y);
    fit = fit_variational(data, weight_prior, precision_priors, round_opts,
                          VariationalState{fit.weights, fit.precisions});

    const double r = y - data.instance(pos).dot(fit.weights.mean);
    const bool accepted = bandit.record(arm, r * r);
    ledger.record(arm);
    paid += settle(fit.precisions[arm], config.scheme);

    RoundRecord rec;
    rec.rep = rep;
    rec.round = round;
    rec.instance = split.train_ids[pos];
    rec.annotator = participants[arm].id;
    rec.label = y;
    rec.accepted = accepted;
    rec.rmse = test_rmse(split, fit.weights);
    rec.regret = ledger.regret();
    rec.discarded = bandit.discarded();
    rec.payment = paid;
    records.push_back(rec);

    summary.rounds = round;
    summary.final_rmse = rec.rmse;
    if (config.target_rmse && rec.rmse <= *config.target_rmse) break;
  }

  summary.regret = ledger.regret();
  summary.discarded = bandit.discarded();
  summary.paid = paid;
  summary.pulls.assign(ledger.pulls().begin(), ledger.pulls().end());
  return summary;
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const char* where) {
  if (!j.is_object()) throw InvalidInput(std::string(where) + " must be a JSON object");
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw InvalidInput(std::string("unknown key '") + item.key() + "' in " + where);
    }
  }
}

Interval read_interval(const json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidInput("intervals must be [lo, hi] arrays");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

Strategy parse_strategy(std::string_view name) {
  if (name == "robust_ucb") return Strategy::robust_ucb;
  if (name == "random") return Strategy::random;
  if (name == "instance_only") return Strategy::instance_only;
  if (name == "single_source") return Strategy::single_source;
  throw InvalidInput("unknown strategy '" + std::string(name) + "'");
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::robust_ucb:
      return "robust_ucb";
    case Strategy::random:
      return "random";
    case Strategy::instance_only:
      return "instance_only";
    case Strategy::single_source:
      return "single_source";
  }
  return "robust_ucb";
}

void ExperimentConfig::validate() const {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InvalidInput("test_fraction must lie in (0, 1)");
  }
  if (repetitions < 1) throw InvalidInput("repetitions must be >= 1");
  if (s_grid.empty()) throw InvalidInput("s_grid must not be empty");
  for (double s : s_grid) {
    if (!(s > 0.0)) throw InvalidInput("s_grid entries must be > 0");
  }
  if (annotators.m < 1) throw InvalidInput("annotators.m must be >= 1");
  if (u && !(*u > 0.0)) throw InvalidInput("u must be > 0");
  if (sigma_max && !(*sigma_max > 0.0)) throw InvalidInput("sigma_max must be > 0");
  if (!(single_source_sigma > 0.0)) throw InvalidInput("single_source_sigma must be > 0");
  if (initial_sweeps < 1 || round_sweeps < 1) throw InvalidInput("sweep limits must be >= 1");
  if (!(tolerance > 0.0)) throw InvalidInput("tolerance must be > 0");
  scheme.validate();
}

ExperimentConfig config_from_json(const json& j) {
  check_keys(j,
             {"dataset_path", "transform_kind", "s_grid", "test_fraction", "seed_pool_size",
              "annotators", "budget", "strategy", "u", "sigma_max", "delta_policy", "scheme",
              "strategic", "repetitions", "base_seed", "output_path", "format", "target_rmse",
              "single_source_sigma", "initial_sweeps", "round_sweeps", "tolerance",
              "uncorrected_gamma_update"},
             "config");
  ExperimentConfig c;
  try {
    read_opt(j, "dataset_path", c.dataset_path);
    if (j.contains("transform_kind")) c.transform_kind = parse_transform_kind(j["transform_kind"].get<std::string>());
    read_opt(j, "s_grid", c.s_grid);
    read_opt(j, "test_fraction", c.test_fraction);
    read_opt(j, "seed_pool_size", c.seed_pool_size);
    if (j.contains("annotators")) {
      const auto& a = j["annotators"];
      check_keys(a, {"m", "good", "interval_good", "interval_bad"}, "annotators");
      read_opt(a, "m", c.annotators.m);
      read_opt(a, "good", c.annotators.good);
      if (a.contains("interval_good")) c.annotators.interval_good = read_interval(a["interval_good"]);
      if (a.contains("interval_bad")) c.annotators.interval_bad = read_interval(a["interval_bad"]);
    }
    read_opt(j, "budget", c.budget);
    if (j.contains("strategy")) c.strategy = parse_strategy(j["strategy"].get<std::string>());
    if (j.contains("u") && !j["u"].is_null()) c.u = j["u"].get<double>();
    if (j.contains("sigma_max") && !j["sigma_max"].is_null()) c.sigma_max = j["sigma_max"].get<double>();
    if (j.contains("delta_policy")) c.delta_policy = parse_delta_policy(j["delta_policy"].get<std::string>());
    if (j.contains("scheme")) {
      const auto& s = j["scheme"];
      check_keys(s, {"B", "beta_lower", "beta_upper"}, "scheme");
      read_opt(s, "B", c.scheme.budget);
      read_opt(s, "beta_lower", c.scheme.beta_lower);
      read_opt(s, "beta_upper", c.scheme.beta_upper);
    }
    if (j.contains("strategic")) {
      const auto& s = j["strategic"];
      check_keys(s, {"enabled", "cost_kind", "a", "b", "knee", "grid"}, "strategic");
      read_opt(s, "enabled", c.strategic.enabled);
      if (s.contains("cost_kind")) c.strategic.cost_kind = parse_cost_kind(s["cost_kind"].get<std::string>());
      read_opt(s, "a", c.strategic.a);
      read_opt(s, "b", c.strategic.b);
      read_opt(s, "knee", c.strategic.knee);
      read_opt(s, "grid", c.strategic.grid);
    }
    read_opt(j, "repetitions", c.repetitions);
    read_opt(j, "base_seed", c.base_seed);
    read_opt(j, "output_path", c.output_path);
    if (j.contains("format")) c.format = parse_record_format(j["format"].get<std::string>());
    if (j.contains("target_rmse") && !j["target_rmse"].is_null()) c.target_rmse = j["target_rmse"].get<double>();
    read_opt(j, "single_source_sigma", c.single_source_sigma);
    read_opt(j, "initial_sweeps", c.initial_sweeps);
    read_opt(j, "round_sweeps", c.round_sweeps);
    read_opt(j, "tolerance", c.tolerance);
    read_opt(j, "uncorrected_gamma_update", c.uncorrected_gamma_update);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["dataset_path"] = c.dataset_path;
  j["transform_kind"] = std::string(to_string(c.transform_kind));
  j["s_grid"] = c.s_grid;
  j["test_fraction"] = c.test_fraction;
  j["seed_pool_size"] = c.seed_pool_size;
  j["annotators"] = {{"m", c.annotators.m},
                     {"good", c.annotators.good},
                     {"interval_good", {c.annotators.interval_good.lo, c.annotators.interval_good.hi}},
                     {"interval_bad", {c.annotators.interval_bad.lo, c.annotators.interval_bad.hi}}};
  j["budget"] = c.budget;
  j["strategy"] = std::string(to_string(c.strategy));
  j["u"] = c.u ? json(*c.u) : json(nullptr);
  j["sigma_max"] = c.sigma_max ? json(*c.sigma_max) : json(nullptr);
  j["delta_policy"] = c.delta_policy == DeltaPolicy::fixed_horizon ? "fixed_horizon" : "anytime";
  j["scheme"] = {{"B", c.scheme.budget}, {"beta_lower", c.scheme.beta_lower}, {"beta_upper", c.scheme.beta_upper}};
  j["strategic"] = {{"enabled", c.strategic.enabled},
                    {"cost_kind", std::string(to_string(c.strategic.cost_kind))},
                    {"a", c.strategic.a},
                    {"b", c.strategic.b},
                    {"knee", c.strategic.knee},
                    {"grid", c.strategic.grid}};
  j["repetitions"] = c.repetitions;
  j["base_seed"] = c.base_seed;
  j["output_path"] = c.output_path;
  j["format"] = c.format == RecordFormat::csv ? "csv" : "jsonl";
  j["target_rmse"] = c.target_rmse ? json(*c.target_rmse) : json(nullptr);
  j["single_source_sigma"] = c.single_source_sigma;
  j["initial_sweeps"] = c.initial_sweeps;
  j["round_sweeps"] = c.round_sweeps;
  j["tolerance"] = c.tolerance;
  j["uncorrected_gamma_update"] = c.uncorrected_gamma_update;
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  ExperimentConfig c = config_from_json(j);
  // Relative dataset paths are resolved against the config file's directory.
  if (!c.dataset_path.empty()) {
    const std::filesystem::path data(c.dataset_path);
    if (data.is_relative()) c.dataset_path = (path.parent_path() / data).lexically_normal().string();
  }
  return c;
}

double rmse(const Vector& predicted, const Vector& truth) {
  if (predicted.size() == 0 || predicted.size() != truth.size()) {
    throw InvalidInput("rmse: need equal, nonzero lengths");
  }
  return std::sqrt((predicted - truth).squaredNorm() / static_cast<double>(predicted.size()));
}

PreparedSplit prepare_split(const RawDataset& raw, const ExperimentConfig& config,
                            std::uint64_t seed) {
  const std::size_t n = raw.size();
  if (n < 2) throw InvalidInput("dataset needs at least 2 rows to split");
  const auto order = seeded_permutation(n, derive_seed(seed, kSplitStream));
  const std::size_t n_test = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(config.test_fraction * static_cast<double>(n))), 1, n - 1);

  PreparedSplit out;
  out.test_ids.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  out.train_ids.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  out.train_targets = gather(raw.targets, out.train_ids);
  out.test_targets = gather(raw.targets, out.test_ids);

  const Normalized norm = normalize(gather_rows(raw.features, out.train_ids));
  const Matrix test_norm = norm.params.apply(gather_rows(raw.features, out.test_ids));

  out.spec.kind = config.transform_kind;
  if (config.transform_kind == TransformKind::linear) {
    out.train = norm.rows;
    out.test = test_norm;
    return out;
  }

  out.spec.centers = fit_centers(norm.rows, raw.dim(), derive_seed(seed, kCenterStream));
  out.spec.scale = config.s_grid.front();
  if (config.s_grid.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    for (double s : config.s_grid) {
      TransformSpec candidate = out.spec;
      candidate.scale = s;
      const double score = validation_rmse(transform(norm.rows, candidate), out.train_targets,
                                           derive_seed(seed, kScaleStream));
      if (score < best) {
        best = score;
        out.spec.scale = s;
      }
    }
  }
  out.train = transform(norm.rows, out.spec);
  out.test = transform(test_norm, out.spec);
  return out;
}

RawDataset load_dataset(const ExperimentConfig& config) {
  if (config.dataset_path.empty()) return make_synthetic_dataset(500, 8, config.base_seed);
  return load_csv(config.dataset_path);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RawDataset& raw) {
  config.validate();
  ExperimentResult result;
  for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
    result.summaries.push_back(run_repetition(config, raw, rep, result.records));
  }
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  return run_experiment(config, load_dataset(config));
}

std::vector<FitSummary> run_fit(const ExperimentConfig& config, const RawDataset& raw) {
  config.validate();
  std::vector<FitSummary> out;
  for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
    const std::uint64_t seed = config.base_seed + rep;
    const PreparedSplit split = prepare_split(raw, config, seed);
    const auto profiles = build_annotators(config, seed);
    const auto participants = commit_efforts(profiles, config);

    CrowdDataset data(static_cast<std::size_t>(split.train.cols()), participants.size());
    for (std::size_t pos = 0; pos < split.train_ids.size(); ++pos) {
      data.add_instance(split.train.row(static_cast<Eigen::Index>(pos)).transpose());
      for (std::size_t arm = 0; arm < participants.size(); ++arm) {
        const auto& who = participants[arm];
        data.add_label(pos, arm,
                       noisy_label(profiles[who.id], split.train_targets[static_cast<Eigen::Index>(pos)],
                                   who.effort, seed, split.train_ids[pos]));
      }
    }
    VariationalOptions opts;
    opts.tolerance = config.tolerance;
    opts.max_sweeps = config.initial_sweeps;
    opts.uncorrected_gamma_update = config.uncorrected_gamma_update;
    const std::vector<PrecisionPosterior> priors(participants.size());
    const auto fit = fit_variational(data, WeightPosterior::standard(data.dim()), priors, opts);

    FitSummary s;
    s.rep = rep;
    s.rmse = test_rmse(split, fit.weights);
    s.scale = split.spec.scale;
    s.sweeps = fit.report.iterations;
    s.converged = fit.report.converged;
    out.push_back(s);
  }
  return out;
}

}  // namespace crowd_al
