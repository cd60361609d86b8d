#include <CLI11.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>

#include "commands.hpp"

namespace {

void add_backend_flags(CLI::App* cmd, ptxcli::BackendArgs& b) {
    cmd->add_option("--backend", b.backend, "oracle, stub, or the base URL of an inference server")
        ->capture_default_str();
    cmd->add_option("--config", b.config, "PipelineConfig JSON file");
    cmd->add_option("--workers", b.workers, "Worker threads (0 = all cores)")->capture_default_str();
    cmd->add_option("--oracle-epsilon", b.oracle_epsilon, "Oracle noise half-width")
        ->check(CLI::Range(0.0, 0.399))
        ->capture_default_str();
    cmd->add_option("--seed", b.seed, "Oracle noise seed")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    // Logs go to stderr so stdout stays machine-readable.
    spdlog::set_default_logger(spdlog::stderr_color_mt("ptxtriage"));
    spdlog::cfg::load_env_levels();

    CLI::App app{"Missed-pneumothorax triage: pipeline runner, evaluator and review service"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "ptxtriage 0.1.0");

    ptxcli::RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Ingest a manifest, run the pipeline and triage, write results");
    run_cmd->add_option("--manifest", run.manifest, "Line-delimited JSON manifest")->required();
    run_cmd->add_option("--out", run.out, "Results file (line-delimited JSON); '-' for stdout")->required();
    run_cmd->add_option("--data-dir", run.data_dir, "Persist the event log here instead of in memory");
    run_cmd->add_option("--lexicon", run.lexicon, "Replacement report-classifier lexicon");
    add_backend_flags(run_cmd, run.backend);

    ptxcli::EvalArgs eval;
    auto* eval_cmd = app.add_subcommand("eval", "Stratified AUC table from run results and manifest labels");
    eval_cmd->add_option("--results", eval.results, "Output of 'ptxtriage run'")->required();
    eval_cmd->add_option("--manifest", eval.manifest, "Manifest carrying labels")->required();
    eval_cmd->add_option("--methods", eval.methods, "Comma-separated: a,b,c,ens_ac,ens_abc")->capture_default_str();
    eval_cmd->add_flag("--json", eval.json, "Print JSON instead of a text table");

    ptxcli::NlpArgs nlp;
    auto* nlp_cmd = app.add_subcommand("nlp", "Classify one report (file or standard input)");
    nlp_cmd->add_option("--report", nlp.report, "Report text file; standard input when omitted");
    nlp_cmd->add_option("--lexicon", nlp.lexicon, "Replacement lexicon file");

    ptxcli::ServeArgs serve;
    auto* serve_cmd = app.add_subcommand("serve", "Run the review HTTP API");
    serve_cmd->add_option("--host", serve.host)->capture_default_str();
    serve_cmd->add_option("--port", serve.port)->check(CLI::Range(0, 65535))->capture_default_str();
    serve_cmd->add_option("--data-dir", serve.data_dir)->capture_default_str();
    serve_cmd->add_option("--ui-dir", serve.ui_dir, "Static review UI assets mounted at /ui/");
    add_backend_flags(serve_cmd, serve.backend);

    ptxcli::ModelServeArgs model_serve;
    auto* model_cmd = app.add_subcommand("model-serve", "Serve the stub models over the inference wire protocol");
    model_cmd->add_option("--host", model_serve.host)->capture_default_str();
    model_cmd->add_option("--port", model_serve.port)->check(CLI::Range(0, 65535))->capture_default_str();

    ptxcli::SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic evaluation set with planted missed findings");
    synth_cmd->add_option("--out", synth.out, "Output directory")->required();
    synth_cmd->add_option("--studies", synth.studies)->capture_default_str();
    synth_cmd->add_option("--planted", synth.planted)->capture_default_str();
    synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
    synth_cmd->add_option("--image-size", synth.image_size)->check(CLI::Range(16, 4096))->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error: " << e.what() << "\n\n";
        const CLI::App* failing = &app;
        for (auto* sub : app.get_subcommands()) failing = sub;
        std::cerr << failing->help();
        return ptxcli::kExitUsage;
    }

    if (run_cmd->parsed()) return ptxcli::cmd_run(run);
    if (eval_cmd->parsed()) return ptxcli::cmd_eval(eval);
    if (nlp_cmd->parsed()) return ptxcli::cmd_nlp(nlp);
    if (serve_cmd->parsed()) return ptxcli::cmd_serve(serve);
    if (model_cmd->parsed()) return ptxcli::cmd_model_serve(model_serve);
    if (synth_cmd->parsed()) return ptxcli::cmd_synth(synth);
    return ptxcli::kExitUsage;
}
