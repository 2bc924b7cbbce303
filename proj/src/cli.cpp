#include "hocr/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hocr/models.hpp"
#include "hocr/verify.hpp"

namespace hocr {

namespace {

struct RunConfig {
    std::string model;            // catalog name
    std::string file;             // model definition file
    std::string system = "full";  // simulate target: full | reduced
    double t_end = 5.0;
    double dt = 0.0;  // > 0 selects the fixed-step integrator
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    std::string output;  // empty = stdout
    std::string format = "csv";
    bool promote_energy = false;
    std::vector<std::string> coupling_names;
    bool co_integrate_time = false;
    unsigned seed = 20240901;
};

/// Bases of fractional-exponent powers, outermost first; used to name the
/// radical when a trajectory leaves the reduction chart's domain.
void collect_radical_bases(const Expr& e, std::vector<Expr>& out) {
    if (!e) return;
    if (e->kind == NodeKind::Pow && denominator(e->exponent()) != 1 && !is_rational(e->base()))
        out.push_back(e->base());
    for (const Expr& a : e->args) collect_radical_bases(a, out);
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

ModelDescriptor load_configured(const RunConfig& cfg) {
    return configure_model(
        {cfg.model, cfg.file, cfg.promote_energy, cfg.coupling_names});
}

int cmd_list(std::ostream& out) {
    for (const std::string& name : builtin_model_names()) out << name << "\n";
    return 0;
}

int cmd_reduce(const RunConfig& cfg, std::ostream& out) {
    ModelDescriptor m = load_configured(cfg);
    if (!m.reduction)
        throw ModelError("model '" + m.name +
                         "' declares no scaling symmetry; nothing to reduce");
    const ReductionResult& r = *m.reduction;

    out << "model = " << m.name << "\n";
    out << "scaled coordinate = " << r.sym.coordinate << " (order " << r.k << ")\n";
    out << "Lambda = " << r.sym.Lambda.str() << "\n";
    out << "reparameterized = " << (r.reparameterized ? "true" : "false") << "\n";
    if (r.reparameterized)
        out << "dtau/dt = exp((" << r.repar_exponent.str() << ")*rho)\n";
    if (m.lambda_E) out << "lambda_E = " << m.lambda_E->str() << "\n";
    for (const auto& [name, w] : r.sym.extra_weights)
        out << "weight " << name << " = " << w.str() << "\n";
    out << "f = " << to_string(r.f) << "\n";
    out << "S = " << to_string(r.S_expr) << "\n";
    out << "L^H = " << to_string(r.herglotz_L) << "\n";
    if (m.contact) out << "H^c = " << to_string(m.contact->H) << "\n";
    out << "forward map (rho chart from the full chart):\n";
    for (const auto& [s, e] : r.forward_map)
        out << "  " << s.name() << " = " << to_string(e) << "\n";
    out << "inverse map (full chart from the rho chart):\n";
    for (const auto& [s, e] : r.inverse_map)
        out << "  " << s.name() << " = " << to_string(e) << "\n";
    return 0;
}

void write_trajectory(const RunConfig& cfg, const ModelDescriptor& m,
                      const CompiledModel& cm, const Trajectory& tr, std::ostream& out) {
    if (cfg.format == "json") {
        nlohmann::json j;
        j["model"] = m.name;
        j["system"] = cfg.system;
        j["parameterization"] = cm.parameterization;
        j["columns"] = nlohmann::json::array();
        j["columns"].push_back("time");
        for (const std::string& c : tr.columns) j["columns"].push_back(c);
        j["rows"] = nlohmann::json::array();
        for (size_t i = 0; i < tr.times.size(); ++i) {
            nlohmann::json row = nlohmann::json::array();
            row.push_back(tr.times[i]);
            for (double v : tr.rows[i]) row.push_back(v);
            j["rows"].push_back(std::move(row));
        }
        out << j.dump(2) << "\n";
        return;
    }
    out << "time";
    for (const std::string& c : tr.columns) out << "," << c;
    out << "\n";
    for (size_t i = 0; i < tr.times.size(); ++i) {
        out << fmt17(tr.times[i]);
        for (double v : tr.rows[i]) out << "," << fmt17(v);
        out << "\n";
    }
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
    ModelDescriptor m = load_configured(cfg);
    SimulationResult sim = simulate_model(
        m, {cfg.system, cfg.t_end, cfg.dt, cfg.rel_tol, cfg.abs_tol, cfg.co_integrate_time});
    write_trajectory(cfg, m, sim.compiled, sim.trajectory, out);
    return 0;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
    ModelDescriptor m = load_configured(cfg);
    VerificationReport rep = run_model_suite(m, cfg.t_end, cfg.seed);
    if (cfg.format == "json")
        out << rep.json() << "\n";
    else
        out << rep.text();
    return rep.all_pass() ? 0 : 1;
}

}  // namespace

ModelDescriptor configure_model(const ModelOptions& opt) {
    if (opt.model.empty() == opt.file.empty())
        throw ModelError("exactly one of --model or --file is required");
    ModelDescriptor m =
        opt.file.empty() ? builtin_model(opt.model) : load_model_file(opt.file);

    if (!opt.promote_couplings.empty()) {
        if (!m.symmetry)
            throw ModelError("--promote-coupling requires a declared symmetry");
        LagrangianSystem prom = promote_couplings(m.system, opt.promote_couplings);
        auto weights = solve_coupling_weights(prom, *m.symmetry);
        ScalingSymmetry sym = *m.symmetry;
        for (const auto& [name, w] : weights) sym.extra_weights[name] = w;
        m.system = std::move(prom);
        m.symmetry = std::move(sym);
        m.reduction.reset();
        m.rho_hamiltonian.reset();
        m.contact.reset();
        m.full_hamiltonian.reset();
    }

    // a promoted coupling appears only through its velocity, so the Legendre
    // map is degenerate; keep the Lagrangian-side artifacts in that case
    bool require_hamiltonian = opt.promote_couplings.empty();
    if (opt.promote_energy) {
        if (!m.symmetry) throw ModelError("--promote-energy requires a declared symmetry");
        auto [prom, lam_E] = promote_energy(m.system, *m.symmetry);
        ModelDescriptor staged = m;
        staged.system = prom;
        staged.reduction.reset();
        staged.rho_hamiltonian.reset();
        staged.contact.reset();
        ensure_pipeline(staged, require_hamiltonian);
        m.promoted = std::move(prom);
        m.lambda_E = lam_E;
        m.reduction = std::move(staged.reduction);
        m.rho_hamiltonian = std::move(staged.rho_hamiltonian);
        m.contact = std::move(staged.contact);
    } else {
        ensure_pipeline(m, require_hamiltonian);
    }

    // file-loaded models without a symmetry still need a full-side system
    if (!m.reduction && !m.full_hamiltonian)
        m.full_hamiltonian = legendre_ostrogradsky(m.system);
    return m;
}

SimulationResult simulate_model(const ModelDescriptor& m, const SimulateOptions& opt) {
    if (opt.system != "full" && opt.system != "reduced")
        throw ModelError("--system must be 'full' or 'reduced'");
    bool reduced = opt.system == "reduced";
    if (reduced && !m.reduction)
        throw ModelError("model '" + m.name +
                         "' declares no scaling symmetry; no reduced system");
    if (reduced && !m.contact)
        throw ModelError("model '" + m.name +
                         "': reduced Hamiltonian unavailable (degenerate momentum relation)");

    // readout of the reduced core f along the run, expressed through the
    // phase variables; the Legendre inversion eliminates the top jets
    std::vector<std::pair<Symbol, Expr>> aux;
    std::vector<Expr> radical_bases;
    if (m.reduction) {
        const ReductionResult& r = *m.reduction;
        Symbol core = Symbol::intern("f_core", SymKind::Auxiliary);
        if (reduced) {
            std::map<Symbol, Expr> rho_to_chi;
            for (int a = 0; a <= 2 * (r.k - 1); ++a)
                rho_to_chi[r.rho_chart.jet("rho", a + 1)] = make_symbol(r.chi(a));
            Expr f_chi = simplify(substitute(r.f_rho, rho_to_chi));
            collect_radical_bases(f_chi, radical_bases);
            aux.emplace_back(core, simplify(substitute(f_chi, m.contact->top_inverse)));
        } else if (m.rho_hamiltonian) {
            collect_radical_bases(r.f_rho, radical_bases);
            aux.emplace_back(
                core, simplify(substitute(r.f_rho, m.rho_hamiltonian->top_inverse)));
        }
    }

    SimulationResult sim;
    sim.compiled = reduced
                       ? compile_reduced_dynamics(m, {}, opt.co_integrate_time, aux)
                       : compile_full_dynamics(m, {}, aux);
    const CompiledModel& cm = sim.compiled;
    try {
        if (opt.t_end <= 0.0) {
            sim.trajectory = integrate_fixed(cm.ode, cm.y0, 0.0, 0.0, 1.0);  // single row
        } else if (opt.dt > 0.0) {
            sim.trajectory = integrate_fixed(cm.ode, cm.y0, 0.0, opt.t_end, opt.dt);
        } else {
            sim.trajectory =
                integrate_adaptive(cm.ode, cm.y0, 0.0, opt.t_end, opt.rel_tol, opt.abs_tol);
        }
    } catch (const IntegrationError& e) {
        // a radical model that stops integrating has run into the boundary of
        // the reduction chart; name the offending sqrt argument
        if (radical_bases.empty()) throw;
        std::string msg(e.what());
        size_t cut = msg.rfind(" (last good time");
        if (cut != std::string::npos) msg.resize(cut);
        throw IntegrationError(msg + "; sqrt argument " + to_string(radical_bases.front()) +
                                   " reaches its domain boundary",
                               e.last_good_time);
    }
    return sim;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"symbolic-numeric reduction toolkit for scaling-symmetric "
                 "higher-order Lagrangian systems"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto add_source = [&](CLI::App* c) {
        c->add_option("--model", cfg.model, "catalog model name (see `list`)");
        c->add_option("--file", cfg.file, "model definition file");
        c->add_flag("--promote-energy", cfg.promote_energy,
                    "promote the additive energy constant to a velocity");
        c->add_option("--promote-coupling", cfg.coupling_names,
                      "promote a named coupling parameter to a velocity");
        c->add_option("--output", cfg.output, "write to this file instead of stdout");
    };

    app.add_subcommand("list", "list the built-in model catalog");
    CLI::App* reduce = app.add_subcommand("reduce", "print the reduction artifacts");
    add_source(reduce);
    CLI::App* simulate = app.add_subcommand("simulate", "integrate and export a trajectory");
    add_source(simulate);
    simulate->add_option("--system", cfg.system, "'full' or 'reduced' dynamics");
    simulate->add_option("--t-end", cfg.t_end, "integration horizon");
    simulate->add_option("--dt", cfg.dt, "fixed step size (omit for adaptive)");
    simulate->add_option("--rel-tol", cfg.rel_tol, "adaptive relative tolerance");
    simulate->add_option("--abs-tol", cfg.abs_tol, "adaptive absolute tolerance");
    simulate->add_option("--format", cfg.format, "'csv' or 'json'");
    simulate->add_flag("--co-integrate-time", cfg.co_integrate_time,
                       "append rho and the physical time to the reduced states");
    CLI::App* verify = app.add_subcommand("verify", "run the model's verification suite");
    add_source(verify);
    verify->add_option("--t-end", cfg.t_end, "check horizon");
    verify->add_option("--format", cfg.format, "'text' or 'json'");
    verify->add_option("--seed", cfg.seed, "seed for sampling-based equivalence");

    std::vector<const char*> argv{"hocr"};
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        std::ofstream file_out;
        std::ostream* os = &out;
        if (!cfg.output.empty()) {
            file_out.open(cfg.output);
            if (!file_out) throw ModelError("cannot open output file '" + cfg.output + "'");
            os = &file_out;
        }
        if (app.got_subcommand("list")) return cmd_list(*os);
        if (app.got_subcommand("reduce")) return cmd_reduce(cfg, *os);
        if (app.got_subcommand("simulate")) return cmd_simulate(cfg, *os);
        return cmd_verify(cfg, *os);
    } catch (const IntegrationError& e) {
        err << "error: integration failed: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace hocr
