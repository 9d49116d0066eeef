// Serial reference vs OpenMP kernels on a synthetic workload.
// usage: orlog_bench [entities] [queries_per_template] [threads]

#include <omp.h>

#include <cstdio>
#include <cstdlib>
#include <string>

#include "orlog/evaluation.hpp"
#include "orlog/pipeline.hpp"
#include "orlog/retrieval.hpp"
#include "orlog/synth.hpp"

using namespace orlog;

namespace {

// Elicitation cost is dominated by the oracle; simulate a small fixed cost.
class SlowMock final : public OracleBackend {
  public:
    explicit SlowMock(MockBackend& inner) : inner_(inner) {}
    OracleResponse score(const TruthPrompt& p) override {
        volatile double x = 0;
        for (int i = 0; i < 20000; ++i) x = x + 1e-9 * i;
        return inner_.score(p);
    }

  private:
    MockBackend& inner_;
};

template <class F>
double seconds(F&& f) {
    const double t0 = omp_get_wtime();
    f();
    return omp_get_wtime() - t0;
}

void line(const char* what, double serial, double parallel, bool same) {
    std::printf("%-12s serial %8.4f s  parallel %8.4f s  speedup %5.2fx  %s\n", what, serial,
                parallel, serial / parallel, same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    SynthConfig cfg;
    cfg.entities = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 2000;
    cfg.queries_per_template = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 40;
    const int threads = argc > 3 ? std::atoi(argv[3]) : omp_get_max_threads();
    const auto data = generate_synth(cfg);
    std::printf("entities %zu  queries %zu  threads %d\n", data.corpus.size(),
                data.queries.size(), threads);

    const auto index = InvertedIndex::build(data.corpus);
    std::vector<QueryText> texts;
    for (const auto& q : data.queries) texts.push_back({q.qid, q.raw});

    BatchRetrieval rs, rp;
    const double r_serial = seconds([&] { rs = retrieve_batch_serial(index, texts, 100); });
    const double r_par = seconds([&] { rp = retrieve_batch(index, texts, 100, {}, threads); });
    line("retrieve", r_serial, r_par, rs.candidates == rp.candidates);

    MockBackend mock(data.priors);
    SlowMock slow(mock);
    const PipelineInput input{&data.queries, &data.corpus, &rs.candidates};
    PipelineResult ps, pp;
    const double p_serial = seconds([&] { ps = run_pipeline_serial(input, slow); });
    const double p_par = seconds([&] { pp = run_pipeline(input, slow, {}, threads); });
    line("rerank", p_serial, p_par, ps.lists == pp.lists && ps.ledger == pp.ledger);

    Run run;
    for (const auto& [qid, list] : pp.lists) {
        for (const auto& e : list.entries) run[qid].push_back(e.entity_id);
    }
    MetricsReport es, ep;
    const double e_serial = seconds([&] {
        for (int i = 0; i < 50; ++i) es = evaluate(run, data.qrels);
    });
    const double e_par = seconds([&] {
        for (int i = 0; i < 50; ++i) ep = evaluate_parallel(run, data.qrels, threads);
    });
    line("evaluate x50", e_serial, e_par, es.per_query == ep.per_query);
    return 0;
}
