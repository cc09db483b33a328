#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "splitgrid/io.hpp"
#include "splitgrid/solver.hpp"

namespace sg = splitgrid;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitNumericalFailure = 2;

sg::SplitPhasor device_current(const sg::NetworkCase& c, const sg::CaseLayout& layout,
                               const sg::SolveResult& res, const sg::Bus& bus) {
    sg::SplitPhasor v = res.voltages[bus.id];
    int k = layout.extra_offset[bus.id];
    return std::visit(
        [&](const auto& dev) -> sg::SplitPhasor {
            using T = std::decay_t<decltype(dev)>;
            if constexpr (std::is_same_v<T, sg::SlackSource>)
                return {res.extras(k), res.extras(k + 1)};
            else if constexpr (std::is_same_v<T, sg::PQLoad>)
                return sg::pq_currents(dev, v);
            else if constexpr (std::is_same_v<T, sg::ZipLoad>)
                return sg::zip_currents(dev, v);
            else if constexpr (std::is_same_v<T, sg::ExpLoad>)
                return sg::exp_currents(dev, v);
            else if constexpr (std::is_same_v<T, sg::PvBus>)
                return sg::pq_currents(sg::PQLoad{-dev.p, -res.extras(k)}, v);
            else if constexpr (std::is_same_v<T, sg::ImDevice>)
                return sg::im_currents(dev.params, dev.torque, v);
            else {
                if (dev.tmpl.kind == sg::GlassKind::VoltageDependent)
                    return sg::evaluate(dev.tmpl, v);
                return {res.extras(k), res.extras(k + 1)};
            }
        },
        bus.device);
}

int run_solve(const std::string& case_path, const sg::SolverOptions& opts,
              const std::string& out_path) {
    sg::NetworkCase c = sg::load_case(case_path);
    sg::SolveResult res = sg::solve_power_flow(c, opts);
    sg::CaseLayout layout = sg::make_layout(c);

    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << "bus,v_re,v_im,v_mag,v_angle_deg,i_re,i_im,p,q\n";
    for (const auto& bus : c.buses) {
        sg::SplitPhasor v = res.voltages[bus.id];
        sg::SplitPhasor i = device_current(c, layout, res, bus);
        double p = v.re * i.re + v.im * i.im;   // power consumed by the device
        double q = v.im * i.re - v.re * i.im;
        out << bus.id << ',' << sg::format_double(v.re) << ',' << sg::format_double(v.im)
            << ',' << sg::format_double(v.magnitude()) << ','
            << sg::format_double(v.angle() * 180.0 / 3.14159265358979323846) << ','
            << sg::format_double(i.re) << ',' << sg::format_double(i.im) << ','
            << sg::format_double(p) << ',' << sg::format_double(q) << '\n';
    }
    out << "# residual history: iter,dv_inf,kcl_inf\n";
    for (size_t it = 0; it < res.residual_history.size(); ++it)
        out << "# " << it + 1 << ',' << sg::format_double(res.residual_history[it].dv_inf)
            << ',' << sg::format_double(res.residual_history[it].kcl_inf) << '\n';

    double dv = res.residual_history.empty() ? 0.0 : res.residual_history.back().dv_inf;
    double kcl = res.residual_history.empty() ? 0.0 : res.residual_history.back().kcl_inf;
    std::cout << "converged=" << (res.converged ? 1 : 0) << " iterations=" << res.iterations
              << " dv_inf=" << sg::format_double(dv)
              << " kcl_inf=" << sg::format_double(kcl) << "\n";
    if (!res.converged) {
        std::cerr << "power flow did not converge within " << opts.max_iter
                  << " iterations\n";
        return kExitNumericalFailure;
    }
    return kExitOk;
}

int run_export_stamps(const std::string& case_path, const sg::SolverOptions& base_opts,
                      const std::string& prefix) {
    sg::NetworkCase c = sg::load_case(case_path);
    sg::SolverOptions opts = base_opts;
    opts.trace = [&](int iter, const sg::SplitSystem& sys) {
        std::ofstream out(prefix + ".iter" + std::to_string(iter) + ".csv");
        if (!out) throw std::runtime_error("cannot write stamp dump");
        int d = sys.dimension();
        out << "# assembled split-circuit system, dimension " << d << "\n";
        for (int r = 0; r < d; ++r) {
            for (int col = 0; col < d; ++col)
                out << sg::format_double(sys.matrix()(r, col)) << (col + 1 < d ? "," : "");
            out << "," << sg::format_double(sys.rhs()(r)) << "\n";
        }
    };
    sg::SolveResult res = sg::solve_power_flow(c, opts);
    std::cout << "converged=" << (res.converged ? 1 : 0)
              << " systems_written=" << res.residual_history.size() << "\n";
    return res.converged ? kExitOk : kExitNumericalFailure;
}

struct SynthArgs {
    std::string model;
    double p = 0.0, q = 0.0;
    sg::ZipLoad zip;
    sg::ExpLoad expl;
    sg::IMParams im;
    std::vector<double> torques;
    std::vector<double> vr_list, vi_list{0.0};
    double vr_min = 0.0, vr_max = 0.0;
    int vr_steps = 0;
    double noise = 0.0;
    std::uint64_t seed = 0;
    double min_fraction = 0.5;
    std::string out;
};

int run_synth(const SynthArgs& a) {
    sg::SweepSpec sweep;
    if (!a.vr_list.empty()) {
        sweep.re_points = a.vr_list;
    } else {
        if (a.vr_steps < 2 || !(a.vr_max > a.vr_min))
            throw std::invalid_argument("sweep needs --vr-list or --vr-min/--vr-max/--vr-steps");
        for (int k = 0; k < a.vr_steps; ++k)
            sweep.re_points.push_back(a.vr_min + (a.vr_max - a.vr_min) * k / (a.vr_steps - 1));
    }
    sweep.im_points = a.vi_list;
    sweep.tags = a.torques;
    sweep.noise_sigma = a.noise;
    sweep.seed = a.seed;

    sg::PhysicsModel model = sg::PQLoad{a.p, a.q};
    if (a.model == "pq") model = sg::PQLoad{a.p, a.q};
    else if (a.model == "zip") model = a.zip;
    else if (a.model == "exp") model = a.expl;
    else if (a.model == "im") {
        if (a.torques.empty()) throw std::invalid_argument("im model requires --torque");
        model = sg::ImMachine{a.im};
    } else throw std::invalid_argument("unknown model '" + a.model + "'");

    sg::SynthesisResult res = sg::synthesize(model, sweep);
    if (res.skipped > 0)
        std::cerr << "skipped " << res.skipped << " infeasible sweep points\n";
    size_t attempted = res.records.size() + res.skipped;
    if (res.records.empty() ||
        static_cast<double>(res.records.size()) < a.min_fraction * attempted) {
        std::cerr << "synthesis produced too few records (" << res.records.size()
                  << " of " << attempted << ")\n";
        return kExitNumericalFailure;
    }
    sg::save_measurements(res.records, a.out);
    std::cout << "records=" << res.records.size() << " skipped=" << res.skipped << "\n";
    return kExitOk;
}

int run_fit(const std::string& meas_path, const sg::FitConfig& cfg,
            std::optional<double> tag_filter, const std::string& out_path) {
    std::vector<sg::MeasurementRecord> records = sg::load_measurements(meas_path);
    if (tag_filter) {
        std::erase_if(records, [&](const sg::MeasurementRecord& r) {
            return !r.tag || *r.tag != *tag_filter;
        });
    }
    sg::FitReport rep = sg::fit(records, cfg);
    sg::save_template(rep.tmpl, out_path);

    std::string dropped;
    const auto& exps = sg::monomial_exponents(cfg.order);
    for (int c : rep.unidentifiable) {
        if (!dropped.empty()) dropped += ";";
        dropped += "B_R^" + std::to_string(exps[c].first) +
                   "*B_I^" + std::to_string(exps[c].second);
    }
    std::cout << "n_records=" << rep.n_records
              << " rmse_r=" << sg::format_double(rep.rmse_r)
              << " rmse_i=" << sg::format_double(rep.rmse_i)
              << " max_abs_residual=" << sg::format_double(rep.max_abs_residual)
              << " condition_number=" << sg::format_double(rep.condition_number)
              << " unidentifiable=" << (dropped.empty() ? "none" : dropped) << "\n";
    return kExitOk;
}

int run_validate(const std::string& tmpl_path, const std::string& meas_path,
                 const std::string& out_path) {
    sg::GlassTemplate t = sg::load_template(tmpl_path);
    std::vector<sg::MeasurementRecord> records = sg::load_measurements(meas_path);
    sg::ValidationReport rep = sg::validate(t, records);

    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << "v_re,v_im,i_re,i_im,pred_re,pred_im,resid_re,resid_im,extrapolated,tag\n";
    for (const auto& row : rep.rows) {
        sg::SplitPhasor meas = t.kind == sg::GlassKind::VoltageDependent
                                   ? row.record.i : row.record.v;
        out << sg::format_double(row.record.v.re) << ',' << sg::format_double(row.record.v.im)
            << ',' << sg::format_double(row.record.i.re) << ','
            << sg::format_double(row.record.i.im) << ','
            << sg::format_double(row.predicted.re) << ','
            << sg::format_double(row.predicted.im) << ','
            << sg::format_double(row.predicted.re - meas.re) << ','
            << sg::format_double(row.predicted.im - meas.im) << ','
            << (row.extrapolated ? 1 : 0) << ',';
        if (row.record.tag) out << sg::format_double(*row.record.tag);
        out << '\n';
    }
    std::cout << "n_records=" << rep.rows.size()
              << " rmse_r=" << sg::format_double(rep.rmse_r)
              << " rmse_i=" << sg::format_double(rep.rmse_i)
              << " max_abs_residual=" << sg::format_double(rep.max_abs_residual)
              << " extrapolation_fraction=" << sg::format_double(rep.extrapolation_fraction)
              << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"splitgrid: split-circuit power flow and semi-empirical load model fitting"};
    app.require_subcommand(1);

    sg::SolverOptions opts;
    std::string case_path, out_path, meas_path, tmpl_path;

    auto add_solver_flags = [&](CLI::App* cmd) {
        cmd->add_option("--tol-v", opts.tol_v, "voltage-update tolerance (pu)");
        cmd->add_option("--tol-kcl", opts.tol_kcl, "KCL residual tolerance (pu)");
        cmd->add_option("--max-iter", opts.max_iter, "iteration cap");
        cmd->add_option("--damping", opts.damping, "Newton damping factor in (0,1]");
    };

    auto* solve = app.add_subcommand("solve", "solve a power-flow case");
    solve->add_option("case", case_path, "case file")->required();
    add_solver_flags(solve);
    solve->add_option("--out", out_path, "results CSV")->default_val("results.csv");

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth", "synthesize measurement data from a physics model");
    synth->add_option("--model", sa.model, "pq|zip|exp|im")->required();
    synth->add_option("--p", sa.p);
    synth->add_option("--q", sa.q);
    synth->add_option("--p0", sa.zip.p0)->each([&](const std::string&) { sa.expl.p0 = sa.zip.p0; });
    synth->add_option("--q0", sa.zip.q0)->each([&](const std::string&) { sa.expl.q0 = sa.zip.q0; });
    synth->add_option("--ap", sa.zip.a_p);
    synth->add_option("--bp", sa.zip.b_p);
    synth->add_option("--cp", sa.zip.c_p);
    synth->add_option("--aq", sa.zip.a_q);
    synth->add_option("--bq", sa.zip.b_q);
    synth->add_option("--cq", sa.zip.c_q);
    synth->add_option("--pv-exp", sa.expl.p_v);
    synth->add_option("--qv-exp", sa.expl.q_v);
    synth->add_option("--rs", sa.im.r_s);
    synth->add_option("--xs", sa.im.x_s);
    synth->add_option("--xm", sa.im.x_m);
    synth->add_option("--rr", sa.im.r_r);
    synth->add_option("--poles", sa.im.poles);
    synth->add_option("--omega-s", sa.im.omega_s);
    synth->add_option("--torque", sa.torques, "torque tag(s), repeatable");
    synth->add_option("--vr-list", sa.vr_list, "explicit V_R sample points");
    synth->add_option("--vr-min", sa.vr_min);
    synth->add_option("--vr-max", sa.vr_max);
    synth->add_option("--vr-steps", sa.vr_steps);
    synth->add_option("--vi-list", sa.vi_list, "V_I sample points (default 0)");
    synth->add_option("--noise", sa.noise, "current noise sigma");
    synth->add_option("--seed", sa.seed);
    synth->add_option("--min-fraction", sa.min_fraction, "minimum feasible-point fraction");
    synth->add_option("--out", sa.out, "measurement CSV")->default_val("meas.csv");

    sg::FitConfig fc;
    std::string kind_str = "voltage", center_str = "data-mean";
    std::optional<double> tag_filter;
    double tag_value = 0.0;
    auto* fitc = app.add_subcommand("fit", "fit a polynomial template to measurements");
    fitc->add_option("measurements", meas_path, "measurement CSV")->required();
    fitc->add_option("--order", fc.order, "Taylor order N")->required();
    fitc->add_option("--kind", kind_str, "voltage|current");
    fitc->add_option("--ridge", fc.ridge, "ridge strength lambda");
    fitc->add_option("--center", center_str, "zero|data-mean");
    auto* tag_opt = fitc->add_option("--tag", tag_value, "fit only records with this tag");
    fitc->add_option("--min-records", fc.min_records);
    fitc->add_option("--out", out_path, "template file")->default_val("template.glass");

    auto* val = app.add_subcommand("validate", "compare a template against measurements");
    val->add_option("template", tmpl_path, "template file")->required();
    val->add_option("measurements", meas_path, "measurement CSV")->required();
    val->add_option("--out", out_path, "comparison CSV")->default_val("compare.csv");

    auto* exps = app.add_subcommand("export-stamps", "dump per-iteration assembled systems");
    exps->add_option("case", case_path, "case file")->required();
    add_solver_flags(exps);
    exps->add_option("--out", out_path, "output file prefix")->default_val("stamps");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return run_solve(case_path, opts, out_path);
        if (synth->parsed()) return run_synth(sa);
        if (fitc->parsed()) {
            fc.kind = kind_str == "current" ? sg::GlassKind::CurrentDependent
                                            : sg::GlassKind::VoltageDependent;
            if (kind_str != "voltage" && kind_str != "current")
                throw std::invalid_argument("--kind must be voltage or current");
            if (center_str == "zero") fc.center_policy = sg::CenterPolicy::Zero;
            else if (center_str == "data-mean") fc.center_policy = sg::CenterPolicy::DataMean;
            else throw std::invalid_argument("--center must be zero or data-mean");
            if (tag_opt->count() > 0) tag_filter = tag_value;
            return run_fit(meas_path, fc, tag_filter, out_path);
        }
        if (val->parsed()) return run_validate(tmpl_path, meas_path, out_path);
        if (exps->parsed()) return run_export_stamps(case_path, opts, out_path);
    } catch (const sg::DegenerateExcitationError& e) {
        std::cerr << e.what() << "\n";
        return kExitNumericalFailure;
    } catch (const sg::TorqueCapabilityError& e) {
        std::cerr << e.what() << "\n";
        return kExitNumericalFailure;
    } catch (const sg::SingularSystemError& e) {
        std::cerr << e.what() << "\n";
        return kExitNumericalFailure;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitInputError;
    }
    return kExitInputError;
}
