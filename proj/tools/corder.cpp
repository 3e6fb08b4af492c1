#include <corder/annotation.hpp>
#include <corder/bayes_net.hpp>
#include <corder/bundled.hpp>
#include <corder/discovery.hpp>
#include <corder/edge_list.hpp>
#include <corder/effect.hpp>
#include <corder/elicitation.hpp>
#include <corder/error.hpp>
#include <corder/expert.hpp>
#include <corder/llm.hpp>
#include <corder/report.hpp>
#include <corder/sims.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#ifndef CORDER_VERSION
#define CORDER_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace corder;

namespace {

constexpr int kOk = 0;
constexpr int kExpertFailure = 2;
constexpr int kCyclic = 3;
constexpr int kUsage = 64;
constexpr int kData = 65;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Set by `rerun`: LLM and human answers come from the recorded transcript.
std::optional<std::vector<TranscriptRecord>> g_replay;

std::atomic<bool> g_stop{false};
extern "C" void on_signal(int) { g_stop = true; }

// ---------------------------------------------------------------------------
// Output directory and manifest

struct Run {
  std::string command;
  std::vector<std::string> argv;  // without program name and --output
  fs::path out;
  json config = json::object();
  std::optional<std::uint64_t> seed;
  std::vector<std::string> outputs;

  void write(const std::string& name, std::string_view content) {
    write_file((out / name).string(), content);
    if (std::find(outputs.begin(), outputs.end(), name) == outputs.end()) outputs.push_back(name);
  }

  void manifest(int exit_code) {
    json m;
    m["tool"] = "corder";
    m["command"] = command;
    m["argv"] = argv;
    m["config"] = config;
    m["seed"] = seed ? json(*seed) : json(nullptr);
    m["versions"] = {{"corder", CORDER_VERSION},
                     {"compiler", __VERSION__},
                     {"cplusplus", static_cast<long>(__cplusplus)},
                     {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                     {"cli11", CLI11_VERSION}};
    auto files = outputs;
    std::sort(files.begin(), files.end());
    m["outputs"] = files;
    m["exit_code"] = exit_code;
    write_file((out / "manifest.json").string(), m.dump(2) + "\n");
  }
};

// Records every option of a parsed subcommand (given or default) in the config.
void capture_config(const CLI::App& app, Run& run) {
  for (const CLI::Option* o : app.get_options()) {
    auto key = o->get_single_name();
    if (key.empty() || key == "help" || key == "output") continue;
    const bool flag = o->get_expected_max() == 0;
    if (flag) {
      run.config[key] = o->count() > 0;
    } else if (o->count() > 0) {
      auto res = o->results();
      run.config[key] = res.empty() ? std::string() : res.back();
    } else if (!o->get_default_str().empty()) {
      run.config[key] = o->get_default_str();
    } else {
      run.config[key] = nullptr;
    }
  }
}

// ---------------------------------------------------------------------------
// Inputs

std::string context_for(const std::string& graph) {
  try {
    return bundled_context(graph);
  } catch (const UnknownGraph&) {
    return {};
  }
}

BayesNet load_bn_source(const std::string& src) {
  try {
    return bundled_bn(src);
  } catch (const UnknownGraph&) {
    if (!fs::exists(src)) throw UnknownGraph("'" + src + "' is neither a bundled network nor a file");
    return load_bn(read_file(src));
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    cur.erase(0, cur.find_first_not_of(" \t"));
    cur.erase(cur.find_last_not_of(" \t") + 1);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Expert specs: perfect | epsilon:<eps> | llm[:<strategy>] | human | replay:<path>

struct ExpertSpec {
  std::string kind;
  double epsilon = 0.0;
  std::string arg;  // llm strategy or replay path
  std::string text;
};

ExpertSpec parse_expert_spec(const std::string& s) {
  ExpertSpec spec;
  spec.text = s;
  auto colon = s.find(':');
  spec.kind = s.substr(0, colon);
  std::string arg = colon == std::string::npos ? "" : s.substr(colon + 1);
  if (spec.kind == "perfect" || spec.kind == "human") {
    if (!arg.empty()) throw UsageError("expert '" + spec.kind + "' takes no argument");
  } else if (spec.kind == "epsilon") {
    try {
      std::size_t used = 0;
      spec.epsilon = std::stod(arg, &used);
      if (used != arg.size()) throw std::invalid_argument(arg);
    } catch (const std::exception&) {
      throw UsageError("epsilon expert needs a number, e.g. epsilon:0.3");
    }
    if (!(spec.epsilon >= 0.0 && spec.epsilon <= 1.0)) throw UsageError("epsilon must lie in [0, 1]");
  } else if (spec.kind == "llm") {
    spec.arg = arg.empty() ? "base" : arg;
    static const std::vector<std::string> ok = {"base", "cot", "iterative", "one_hop"};
    if (std::find(ok.begin(), ok.end(), spec.arg) == ok.end())
      throw UsageError("llm strategy must be base, cot, iterative or one_hop");
  } else if (spec.kind == "replay") {
    if (arg.empty()) throw UsageError("replay expert needs a transcript path, e.g. replay:run/transcript.jsonl");
    spec.arg = arg;
  } else {
    throw UsageError("unknown expert '" + s + "' (perfect, epsilon:<eps>, llm:<strategy>, human, replay:<path>)");
  }
  return spec;
}

bool needs_seed(const ExpertSpec& s) { return s.kind == "epsilon"; }

struct ExpertFactory {
  std::optional<CausalGraph> truth;
  std::optional<std::uint64_t> seed;
  std::shared_ptr<ChatEndpoint> endpoint;  // shared by primary and tiebreak
  std::unique_ptr<SessionStore> store;
  std::unique_ptr<AnnotationServer> server;
  std::string session;
  std::string graph_source;
  std::string context;
  std::string method = "triplet";
  std::string host = "127.0.0.1";
  int port = 8080;

  std::unique_ptr<Expert> make(const ExpertSpec& spec, std::uint64_t stream) {
    if (spec.kind == "perfect") {
      if (!truth) throw UsageError("the perfect expert needs a known graph");
      return std::make_unique<PerfectExpert>(*truth);
    }
    if (spec.kind == "epsilon") {
      if (!truth) throw UsageError("the epsilon expert needs a known graph");
      if (!seed) throw UsageError("--seed is required with an epsilon expert");
      return std::make_unique<EpsilonExpert>(EpsilonExpertConfig{spec.epsilon, mix_seed(*seed, stream), *truth});
    }
    if (spec.kind == "replay") return std::make_unique<ScriptedExpert>(parse_transcript(read_file(spec.arg)));
    if (spec.kind == "llm") {
      if (!endpoint) {
        if (g_replay)
          endpoint = std::make_shared<ReplayEndpoint>(*g_replay);
        else
          endpoint = std::make_shared<HttpChatEndpoint>(EndpointConfig::from_env());
      }
      LlmConfig cfg;
      cfg.strategy = spec.arg;
      return std::make_unique<LlmExpert>(endpoint, cfg);
    }
    // human
    if (g_replay) return std::make_unique<ScriptedExpert>(*g_replay);
    if (!store) {
      store = std::make_unique<SessionStore>();
      ServerOptions so;
      so.host = host;
      so.port = port;
      so.token = annotation_token_from_env();
      server = std::make_unique<AnnotationServer>(*store, so);
      int bound = server->start();
      SessionConfig sc;
      sc.method = method;
      sc.graph = graph_source;
      sc.context = context;
      session = store->create(sc);
      std::cerr << "annotation session " << session << " on http://" << host << ":" << bound << "\n";
    }
    return std::make_unique<HumanExpert>(*store, session);
  }

  void finish() {
    if (store && !session.empty()) store->close(session);
    if (server) server->stop();
  }
};

// Concurrent experts append out of order; sorting by question keeps reruns
// byte-identical (replay is keyed by question, so nothing is lost).
std::string transcript_text(const Transcript& t, bool concurrent) {
  if (!concurrent) return t.to_jsonl();
  auto recs = t.records();
  std::stable_sort(recs.begin(), recs.end(), [](const TranscriptRecord& a, const TranscriptRecord& b) {
    return a.query.fingerprint() < b.query.fingerprint();
  });
  std::string out;
  for (const auto& r : recs) out += transcript_line(r) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// elicit

struct ElicitArgs {
  std::string graph;
  std::string expert;
  std::string tiebreak;
  std::string method;
  std::string strategy;
  std::optional<std::size_t> k;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> context;
  bool fail_on_cycle = false;
  std::string host = "127.0.0.1";
  int port = 8080;
};

int cmd_elicit(const ElicitArgs& a, Run& run) {
  static const std::vector<std::string> pairwise_strategies = {"base", "cot", "iterative", "one_hop"};
  auto spec = parse_expert_spec(a.expert);
  auto tb_spec = a.tiebreak.empty() ? spec : parse_expert_spec(a.tiebreak);

  std::string method = a.method;
  std::string strategy = a.strategy;
  if (strategy == "pairwise" || strategy == "triplet") {
    if (!method.empty() && method != strategy) throw UsageError("--strategy " + strategy + " conflicts with --method " + method);
    method = strategy;
    strategy.clear();
  }
  if (method.empty()) method = std::find(pairwise_strategies.begin(), pairwise_strategies.end(), strategy) !=
                                       pairwise_strategies.end()
                                   ? "pairwise"
                                   : "triplet";
  if (method != "pairwise" && !strategy.empty())
    throw UsageError("--strategy " + strategy + " applies to the pairwise method only");
  if (strategy.empty()) strategy = spec.kind == "llm" ? spec.arg : "base";
  if (method == "pairwise" &&
      std::find(pairwise_strategies.begin(), pairwise_strategies.end(), strategy) == pairwise_strategies.end())
    throw UsageError("unknown strategy '" + strategy + "'");
  if ((needs_seed(spec) || needs_seed(tb_spec)) && !a.seed)
    throw UsageError("--seed is required with an epsilon expert");
  if (a.k && method == "pairwise") throw UsageError("--k applies to tuple methods only");

  CausalGraph truth = load_graph_source(a.graph);
  run.seed = a.seed;

  ExpertFactory f;
  f.truth = truth;
  f.seed = a.seed;
  f.graph_source = a.graph;
  f.context = a.context ? *a.context : context_for(a.graph);
  f.method = method == "pairwise" ? "pairwise" : "triplet";
  f.host = a.host;
  f.port = a.port;

  auto transcript = std::make_shared<Transcript>();
  int code = kOk;
  bool concurrent = false;
  std::optional<ElicitationReport> report;
  try {
    auto primary = f.make(spec, 1);
    concurrent = primary->max_in_flight() > 1;
    primary->attach_transcript(transcript);
    if (method == "pairwise") {
      report = pairwise_pipeline(truth.vars, *primary, PairwiseOptions{strategy, f.context});
    } else {
      std::unique_ptr<Expert> owned_tb;
      Expert* tb = primary.get();
      if (!a.tiebreak.empty() || spec.kind == "epsilon") {
        owned_tb = f.make(tb_spec, 2);
        owned_tb->attach_transcript(transcript);
        tb = owned_tb.get();
      }
      TripletOptions opt;
      opt.size = method == "quadruplet" ? 4 : 3;
      opt.k = a.k;
      opt.seed = a.seed.value_or(0);
      opt.context = f.context;
      report = triplet_pipeline(truth.vars, *primary, *tb, opt);
    }
  } catch (const ExpertError& e) {
    std::cerr << "expert failure: " << e.what() << "\n";
    code = kExpertFailure;
  }
  f.finish();
  run.write("transcript.jsonl", transcript_text(*transcript, concurrent));
  if (!report) return code;

  const auto& r = *report;
  run.write("report.json", report_to_json(r, &truth));
  run.write("merged.edges", write_edge_list(r.merged));
  run.write("final.edges", write_edge_list(r.final_dag));
  run.write("pruned_order.txt", write_order(r.pruned_order));
  if (r.order) run.write("order.txt", write_order(*r.order));

  auto m = evaluate_report(r, truth);
  std::cout << "method=" << r.method << " strategy=" << r.strategy
            << " dtop=" << (m.dtop ? std::to_string(*m.dtop) : std::string("none")) << " dtop_pruned=" << m.dtop_pruned
            << " shd=" << m.shd << " cycles=" << r.cycles_before_prune << " isolated=" << m.isolated << "\n";
  if (a.fail_on_cycle && r.cycles_before_prune > 0) {
    std::cerr << "merged graph was cyclic (" << r.cycles_before_prune << " short cycles)\n";
    return kCyclic;
  }
  return code;
}

// ---------------------------------------------------------------------------
// discover

struct DiscoverArgs {
  std::string data;
  std::string bn;
  std::string graph;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::string test;
  double alpha = 0.05;
  int max_cond = -1;
  std::string order;
  bool true_order = false;
  std::string fallback;
};

int cmd_discover(const DiscoverArgs& a, Run& run) {
  std::optional<CausalGraph> truth;
  std::optional<SampleTable> data;
  if (!a.graph.empty()) truth = load_graph_source(a.graph);
  if (!a.data.empty()) {
    if (!a.bn.empty()) throw UsageError("give either --data or --bn, not both");
    data = read_csv(read_file(a.data));
  } else if (!a.bn.empty()) {
    if (a.samples == 0) throw UsageError("--bn needs --samples");
    auto bn = load_bn_source(a.bn);
    if (!truth) truth = bn.graph();
    data = forward_sample(bn, a.samples, a.seed);
    run.seed = a.seed;
  }

  std::string test = a.test;
  if (test.empty()) test = !data ? "oracle" : data->discrete ? "chi2" : "fisher-z";
  CiTestConfig cfg;
  cfg.alpha = a.alpha;
  cfg.max_cond_size = a.max_cond;
  if (test == "chi2")
    cfg.test = CiTestKind::ChiSquared;
  else if (test == "fisher-z")
    cfg.test = CiTestKind::FisherZ;
  else if (test == "oracle")
    cfg.test = CiTestKind::Oracle;
  else
    throw UsageError("--test must be chi2, fisher-z or oracle");
  if (cfg.test == CiTestKind::Oracle) {
    if (!truth) throw UsageError("the oracle test needs --graph or --bn");
    cfg.oracle = *truth;
  } else if (!data) {
    throw UsageError("give --data or --bn with --samples");
  }

  MixedGraph cpdag;
  try {
    if (cfg.test == CiTestKind::Oracle) {
      cfg.validate();
      cpdag = pc_cpdag(OracleCiTest(*truth), cfg.max_cond_size);
    } else {
      cpdag = pc_cpdag(*data, cfg);
    }
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  run.write("cpdag.edges", write_edge_list(cpdag));

  TopologicalOrder order;
  if (!a.order.empty()) {
    if (a.true_order) throw UsageError("give either --order or --true-order");
    order = parse_order(read_file(a.order));
  } else if (a.true_order) {
    if (!truth) throw UsageError("--true-order needs --graph or --bn");
    order = topological_order_of(*truth);
  }

  std::unique_ptr<Expert> fallback;
  std::string fb = a.fallback.empty() && truth ? "perfect" : a.fallback;
  if (!fb.empty() && fb != "none") {
    auto spec = parse_expert_spec(fb);
    if (spec.kind == "human") throw UsageError("the human expert is not available as a discovery fallback");
    if (needs_seed(spec)) run.seed = a.seed;
    ExpertFactory f;
    f.truth = truth;
    f.seed = a.seed;
    fallback = f.make(spec, 3);
  }
  auto transcript = std::make_shared<Transcript>();
  if (fallback) fallback->attach_transcript(transcript);

  OrientResult res;
  try {
    res = orient_with_order(cpdag, order, fallback.get(), truth ? context_for(a.graph.empty() ? a.bn : a.graph) : "");
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  } catch (const ExpertError& e) {
    run.write("transcript.jsonl", transcript->to_jsonl());
    std::cerr << "expert failure: " << e.what() << "\n";
    return kExpertFailure;
  }
  if (fallback) run.write("transcript.jsonl", transcript->to_jsonl());
  run.write("final.edges", write_edge_list(res.graph));

  json m;
  m["nodes"] = cpdag.size();
  m["cpdag_directed"] = cpdag.directed_edges().size();
  m["cpdag_undirected"] = cpdag.undirected_edges().size();
  m["final_edges"] = res.graph.adj.edge_count();
  m["fallback_calls"] = res.fallback_calls;
  json dropped = json::array();
  for (const auto& [x, y] : res.dropped) dropped.push_back({x, y});
  m["dropped"] = dropped;
  m["cycle"] = res.cycle ? json(*res.cycle) : json(nullptr);
  if (truth && !res.cycle) {
    m["dtop"] = dtop(topological_order_of(res.graph), *truth);
    m["shd"] = shd(res.graph, *truth);
  } else if (truth) {
    m["dtop"] = nullptr;
    m["shd"] = shd(res.graph, *truth);
  }
  run.write("metrics.json", m.dump(2) + "\n");
  std::cout << m.dump() << "\n";

  if (res.cycle) {
    std::cerr << "cyclic result:";
    for (const auto& n : *res.cycle) std::cerr << " " << n << " ->";
    std::cerr << " " << res.cycle->front() << "\n";
    return kCyclic;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// effect

struct EffectArgs {
  std::string scm;
  std::string graph;
  std::string data;
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  std::string treatment;
  std::string target;
  std::optional<std::string> adjust;
  std::string order;
  bool minimal = false;
  double x = 1.0;
  double x_star = 0.0;
};

int cmd_effect(const EffectArgs& a, Run& run) {
  std::optional<LinearScm> scm;
  std::optional<CausalGraph> graph;
  if (!a.scm.empty()) {
    if (!a.graph.empty()) throw UsageError("give either --scm or --graph");
    scm = load_scm(read_file(a.scm));
  } else if (!a.graph.empty()) {
    scm = random_linear_scm(load_graph_source(a.graph), a.seed);
  }
  if (scm) graph = scm->graph();

  SampleTable data;
  if (!a.data.empty()) {
    data = read_csv(read_file(a.data));
  } else if (scm) {
    data = sample_linear_scm(*scm, a.samples, a.seed);
    run.seed = a.seed;
  } else {
    throw UsageError("give --data, --scm or --graph");
  }

  int modes = (a.adjust ? 1 : 0) + (a.order.empty() ? 0 : 1) + (a.minimal ? 1 : 0);
  if (modes > 1) throw UsageError("give at most one of --adjust, --order, --minimal");

  AdjustmentSet z;
  z.treatment = a.treatment;
  z.target = a.target;
  std::string source = "given";
  if (a.adjust) {
    for (auto& n : split_list(*a.adjust)) z.members.insert(n);
  } else if (!a.order.empty()) {
    auto ord = parse_order(read_file(a.order));
    VariableSet vars(data.columns);
    try {
      z = order_adjustment_set(ord, a.treatment, a.target, &vars);
    } catch (const UnorderedNode& e) {
      throw UsageError(e.what());
    }
    source = "order";
  } else if (graph) {
    auto m = minimal_backdoor(*graph, a.treatment, a.target);
    if (!m) throw UsageError("no backdoor set: '" + a.target + "' is an ancestor of '" + a.treatment + "'");
    z = *m;
    source = "minimal";
  } else if (a.minimal) {
    throw UsageError("--minimal needs --scm or --graph");
  }

  AceEstimate est;
  try {
    est = ace_adjusted(data, a.treatment, a.target, z.members, a.x, a.x_star);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }

  const std::string row = ace_csv_row(z, est);
  run.write("effect.csv", "treatment,target,adjustment,value,stderr\n" + row + "\n");
  json j;
  j["treatment"] = a.treatment;
  j["target"] = a.target;
  j["adjustment"] = z.members;
  j["source"] = source;
  j["unranked"] = z.unranked;
  j["value"] = est.value;
  j["stderr"] = est.stderr_value;
  j["levels"] = {est.levels.first, est.levels.second};
  j["estimator"] = est.estimator;
  j["n_used"] = est.n_used;
  if (graph) j["valid_backdoor"] = is_valid_backdoor(*graph, a.treatment, a.target, z.members);
  if (scm) {
    double t = true_ace(*scm, a.treatment, a.target, a.x, a.x_star);
    j["true_ace"] = t;
    j["epsilon_ace"] = epsilon_ace(est, t);
  }
  run.write("effect.json", j.dump(2) + "\n");
  std::cout << row << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// sample

struct SampleArgs {
  std::string bn;
  std::string scm;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

int cmd_sample(const SampleArgs& a, Run& run) {
  if (a.bn.empty() == a.scm.empty()) throw UsageError("give exactly one of --bn or --scm");
  run.seed = a.seed;
  SampleTable t = !a.bn.empty() ? forward_sample(load_bn_source(a.bn), a.samples, a.seed)
                                : sample_linear_scm(load_scm(read_file(a.scm)), a.samples, a.seed);
  run.write("data.csv", write_csv(t));
  std::cout << t.n_rows() << " rows x " << t.n_cols() << " columns\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// simulate

int write_sim(const SimReport& r, Run& run) {
  run.seed = r.seed;
  run.write("report.json", r.to_json());
  if (r.n_records() > 0) run.write("records.csv", r.to_csv());
  json s = json::object();
  for (const auto& [k, v] : r.summary) s[k] = v;
  std::cout << s.dump() << "\n";
  return kOk;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const auto& part : split_list(s)) {
    auto dots = part.find("..");
    try {
      if (dots == std::string::npos) {
        out.push_back(std::stoull(part));
      } else {
        auto lo = std::stoull(part.substr(0, dots)), hi = std::stoull(part.substr(dots + 2));
        if (hi < lo) throw std::invalid_argument(part);
        for (auto v = lo; v <= hi; ++v) out.push_back(v);
      }
    } catch (const std::exception&) {
      throw UsageError("bad seed list '" + s + "' (e.g. 0..9 or 1,4,7)");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// dispatch

struct Options {
  std::string output = "corder-out";
  ElicitArgs elicit;
  DiscoverArgs discover;
  EffectArgs effect;
  SampleArgs sample;
  struct {
    double eps = 0.3;
    std::size_t trials = 1000000;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    std::size_t nodes = 6;
    std::size_t truths = 20;
    std::size_t samples = 100000;
    std::string graph;
    std::string graphs = "cancer,earthquake,survey,asia";
    std::string seeds = "0..9";
    std::size_t orders = 12;
    std::size_t reps = 200;
    double edge_prob = 0.5;
  } sim;
  struct {
    std::string graph;
    double prob = 1.0;
  } prior;
  struct {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string journal;
  } serve;
  std::string manifest;
};

void add_output(CLI::App* c, Options& o) {
  c->add_option("-o,--output", o.output, "Directory for results and manifest.json")->capture_default_str();
}

int serve(Options& o) {
  SessionStore store(o.serve.journal);
  ServerOptions so;
  so.host = o.serve.host;
  so.port = o.serve.port;
  so.token = annotation_token_from_env();
  AnnotationServer server(store, so);
  int port = server.start();
  std::cerr << "listening on http://" << so.host << ":" << port << (so.token.empty() ? " (no token)" : "") << "\n";
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
  server.stop();
  return kOk;
}

int run_args(std::vector<std::string> args);

int rerun(const Options& o, const std::vector<std::string>& outer) {
  json m;
  try {
    m = json::parse(read_file(o.manifest));
  } catch (const json::exception& e) {
    throw UsageError("cannot read manifest: " + std::string(e.what()));
  }
  auto argv = m.at("argv").get<std::vector<std::string>>();
  bool replay = false;
  for (std::size_t i = 0; i + 1 < argv.size(); ++i)
    if ((argv[i] == "--expert" || argv[i] == "--tiebreak" || argv[i] == "--fallback") &&
        (argv[i + 1].rfind("llm", 0) == 0 || argv[i + 1] == "human"))
      replay = true;
  if (replay) {
    auto path = fs::path(o.manifest).parent_path() / "transcript.jsonl";
    g_replay = parse_transcript(read_file(path.string()));
  }
  bool has_output = std::find(outer.begin(), outer.end(), "-o") != outer.end() ||
                    std::find(outer.begin(), outer.end(), "--output") != outer.end();
  if (!has_output) throw UsageError("rerun needs --output");
  argv.push_back("--output");
  argv.push_back(o.output);
  return run_args(argv);
}

std::vector<std::string> strip_output(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "-o" || args[i] == "--output") {
      ++i;
      continue;
    }
    if (args[i].rfind("--output=", 0) == 0) continue;
    out.push_back(args[i]);
  }
  return out;
}

int run_args(std::vector<std::string> args) {
  Options o;
  CLI::App app{"Causal order elicitation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(CORDER_VERSION));

  auto* el = app.add_subcommand("elicit", "Elicit a causal order from an expert");
  el->add_option("--graph", o.elicit.graph, "Bundled graph name or .bn/.edges path")->required();
  el->add_option("--expert", o.elicit.expert, "perfect | epsilon:<eps> | llm:<strategy> | human | replay:<path>")
      ->required();
  el->add_option("--tiebreak", o.elicit.tiebreak, "Expert spec for tie-breaking (triplet)");
  el->add_option("--method", o.elicit.method)->check(CLI::IsMember({"pairwise", "triplet", "quadruplet"}));
  el->add_option("--strategy", o.elicit.strategy, "base | cot | iterative | one_hop | pairwise | triplet");
  el->add_option("--k", o.elicit.k, "Tuples per pair (subsampled tuple set)")->check(CLI::PositiveNumber);
  el->add_option("--seed", o.elicit.seed);
  el->add_option("--context", o.elicit.context);
  el->add_flag("--fail-on-cycle", o.elicit.fail_on_cycle, "Exit 3 if the merged graph had a cycle");
  el->add_option("--host", o.elicit.host, "Annotation server host (human expert)")->capture_default_str();
  el->add_option("--port", o.elicit.port, "Annotation server port (human expert)")->capture_default_str();
  add_output(el, o);

  auto* di = app.add_subcommand("discover", "PC skeleton and CPDAG, oriented with an order");
  di->add_option("--data", o.discover.data, "CSV file");
  di->add_option("--bn", o.discover.bn, "Bundled network or .bn path to sample from");
  di->add_option("--graph", o.discover.graph, "Ground truth for the oracle test, fallback and metrics");
  di->add_option("--samples", o.discover.samples);
  di->add_option("--seed", o.discover.seed)->capture_default_str();
  di->add_option("--test", o.discover.test, "chi2 | fisher-z | oracle");
  di->add_option("--alpha", o.discover.alpha)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  di->add_option("--max-cond", o.discover.max_cond)->capture_default_str();
  di->add_option("--order", o.discover.order, "Order file, one name per line");
  di->add_flag("--true-order", o.discover.true_order, "Use the ground-truth topological order");
  di->add_option("--fallback", o.discover.fallback, "Expert for edges the order leaves open, or none");
  add_output(di, o);

  auto* ef = app.add_subcommand("effect", "Average causal effect by backdoor adjustment");
  ef->add_option("--scm", o.effect.scm, "Linear SCM file");
  ef->add_option("--graph", o.effect.graph, "Graph for a seeded random linear SCM");
  ef->add_option("--data", o.effect.data, "CSV instead of sampling the SCM");
  ef->add_option("--samples", o.effect.samples)->capture_default_str();
  ef->add_option("--seed", o.effect.seed)->capture_default_str();
  ef->add_option("--treatment", o.effect.treatment)->required();
  ef->add_option("--target", o.effect.target)->required();
  ef->add_option("--adjust", o.effect.adjust, "Comma-separated adjustment set");
  ef->add_option("--order", o.effect.order, "Adjust for everything ranked before the treatment");
  ef->add_flag("--minimal", o.effect.minimal, "Minimal backdoor set from the graph (default with a graph)");
  ef->add_option("--x", o.effect.x)->capture_default_str();
  ef->add_option("--x-star", o.effect.x_star)->capture_default_str();
  add_output(ef, o);

  auto* sa = app.add_subcommand("sample", "Draw samples from a network or SCM");
  sa->add_option("--bn", o.sample.bn);
  sa->add_option("--scm", o.sample.scm);
  sa->add_option("--samples", o.sample.samples)->required()->check(CLI::PositiveNumber);
  sa->add_option("--seed", o.sample.seed)->capture_default_str();
  add_output(sa, o);

  auto* si = app.add_subcommand("simulate", "Theory simulations");
  si->require_subcommand(1);
  auto* s4 = si->add_subcommand("prop4", "Third-pair error of sequential tuple orientation");
  s4->add_option("--eps", o.sim.eps)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  s4->add_option("--trials", o.sim.trials)->capture_default_str()->check(CLI::PositiveNumber);
  s4->add_option("--seed", o.sim.seed)->capture_default_str();
  s4->add_option("--threads", o.sim.threads, "0 = hardware concurrency");
  add_output(s4, o);
  auto* sv = si->add_subcommand("shd-variance", "SHD spread among graphs with D_top 0");
  sv->add_option("--nodes", o.sim.nodes)->capture_default_str()->check(CLI::Range(3, 7));
  sv->add_option("--truths", o.sim.truths)->capture_default_str();
  sv->add_option("--samples", o.sim.samples, "Candidates per truth for 7 nodes")->capture_default_str();
  sv->add_option("--seed", o.sim.seed)->capture_default_str();
  add_output(sv, o);
  auto* sp = si->add_subcommand("perfect", "Pairwise elicitation with the perfect expert");
  sp->add_option("--graph", o.sim.graph)->required();
  add_output(sp, o);
  auto* sm = si->add_subcommand("metric-correlation", "D_top, SHD and ACE error on perturbed orders");
  sm->add_option("--graphs", o.sim.graphs)->capture_default_str();
  sm->add_option("--seeds", o.sim.seeds, "e.g. 0..9 or 1,4,7")->capture_default_str();
  sm->add_option("--orders", o.sim.orders)->capture_default_str();
  sm->add_option("--samples", o.sim.samples)->capture_default_str();
  add_output(sm, o);
  auto* st = si->add_subcommand("triplet-vs-pairwise", "Noisy experts: triplet against pairwise");
  st->add_option("--eps", o.sim.eps)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  st->add_option("--nodes", o.sim.nodes)->capture_default_str();
  st->add_option("--reps", o.sim.reps, "Random graphs")->capture_default_str();
  st->add_option("--edge-prob", o.sim.edge_prob)->capture_default_str();
  st->add_option("--seed", o.sim.seed)->capture_default_str();
  add_output(st, o);

  auto* ep = app.add_subcommand("export-prior", "Level prior for score-based search");
  ep->add_option("--graph", o.prior.graph, "Edge list (may be cyclic) or bundled name")->required();
  ep->add_option("--prob", o.prior.prob)->capture_default_str();
  add_output(ep, o);

  auto* sv2 = app.add_subcommand("serve", "Annotation HTTP service");
  sv2->add_option("--host", o.serve.host)->capture_default_str();
  sv2->add_option("--port", o.serve.port)->capture_default_str();
  sv2->add_option("--journal", o.serve.journal, "Session journal (JSONL) for crash recovery");

  auto* rr = app.add_subcommand("rerun", "Repeat a run from its manifest");
  rr->add_option("manifest", o.manifest)->required();
  add_output(rr, o);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (*sv2) return serve(o);
  if (*rr) return rerun(o, args);

  CLI::App* leaf = app.get_subcommands().front();
  if (*si) leaf = si->get_subcommands().front();

  Run run;
  run.command = *si ? "simulate " + leaf->get_name() : leaf->get_name();
  run.argv = strip_output(args);
  run.out = o.output;
  capture_config(*leaf, run);

  int code = kOk;
  fs::create_directories(run.out);
  try {
    if (*el) code = cmd_elicit(o.elicit, run);
    else if (*di) code = cmd_discover(o.discover, run);
    else if (*ef) code = cmd_effect(o.effect, run);
    else if (*sa) code = cmd_sample(o.sample, run);
    else if (*ep) {
      CausalGraph g = load_graph_source(o.prior.graph);
      auto prior = export_level_prior(g, o.prior.prob);
      run.write("prior.txt", write_level_prior(prior));
      std::cout << write_level_prior(prior);
    } else if (*s4) {
      std::size_t workers = o.sim.threads ? o.sim.threads : std::max(1u, std::thread::hardware_concurrency());
      code = write_sim(sim_prop4(o.sim.eps, o.sim.trials, o.sim.seed, workers), run);
    } else if (*sv) {
      code = write_sim(sim_shd_variance(o.sim.nodes, o.sim.seed, ShdVarianceOptions{o.sim.truths, o.sim.samples}), run);
    } else if (*sp) {
      code = write_sim(sim_perfect_expert(load_graph_source(o.sim.graph)), run);
    } else if (*sm) {
      MetricCorrelationOptions mo;
      mo.orders_per_seed = o.sim.orders;
      mo.samples = o.sim.samples;
      code = write_sim(sim_metric_correlation(split_list(o.sim.graphs), parse_seeds(o.sim.seeds), mo), run);
    } else if (*st) {
      NoisyComparisonOptions no;
      no.epsilon = o.sim.eps;
      no.nodes = o.sim.nodes;
      no.seeds = o.sim.reps;
      no.edge_prob = o.sim.edge_prob;
      code = write_sim(sim_triplet_vs_pairwise(no, o.sim.seed), run);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage: " << e.what() << "\n";
    code = kUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "usage: " << e.what() << "\n";
    code = kUsage;
  } catch (const UnknownGraph& e) {
    std::cerr << "usage: " << e.what() << "\n";
    code = kUsage;
  } catch (const UnknownNode& e) {
    std::cerr << "usage: " << e.what() << "\n";
    code = kUsage;
  } catch (const ExpertError& e) {
    std::cerr << "expert failure: " << e.what() << "\n";
    code = kExpertFailure;
  } catch (const CyclicGraph& e) {
    std::cerr << "cyclic: " << e.what() << "\n";
    code = kCyclic;
  } catch (const Error& e) {
    // ParseError, DegenerateData, MissingColumn, SingularDesign, CptRowSum, ...
    std::cerr << "data error: " << e.what() << "\n";
    code = kData;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "data error: " << e.what() << "\n";
    code = kData;
  }
  run.manifest(code);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run_args(std::move(args));
  } catch (const UsageError& e) {
    std::cerr << "usage: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
