#include "splitgrid/fitting.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <random>

namespace splitgrid {

namespace {

SplitPhasor independent_pair(const MeasurementRecord& r, GlassKind kind) {
    return kind == GlassKind::VoltageDependent ? r.v : r.i;
}

SplitPhasor dependent_pair(const MeasurementRecord& r, GlassKind kind) {
    return kind == GlassKind::VoltageDependent ? r.i : r.v;
}

}  // namespace

DesignMatrix build_design_matrix(std::span<const MeasurementRecord> records,
                                 const FitConfig& config) {
    const int m = basis_size(config.order);
    const int need = std::max(config.min_records, m);
    const int n = static_cast<int>(records.size());
    if (n < need) throw InsufficientRecordsError(n, need);

    SplitPhasor center{0.0, 0.0};
    if (config.center_policy == CenterPolicy::DataMean) {
        for (const auto& r : records) {
            SplitPhasor b = independent_pair(r, config.kind);
            center.re += b.re / n;
            center.im += b.im / n;
        }
    }

    DesignMatrix d;
    d.center = center;
    d.x.resize(n, m);
    d.target_r.resize(n);
    d.target_i.resize(n);
    for (int k = 0; k < n; ++k) {
        SplitPhasor b = independent_pair(records[k], config.kind);
        SplitPhasor a = dependent_pair(records[k], config.kind);
        d.x.row(k) = basis_vector(config.order, b, center).transpose();
        d.target_r(k) = a.re;
        d.target_i(k) = a.im;
    }
    return d;
}

FitReport fit(std::span<const MeasurementRecord> records, const FitConfig& config) {
    DesignMatrix d = build_design_matrix(records, config);
    const int n = static_cast<int>(d.x.rows());
    const int m = static_cast<int>(d.x.cols());

    // Zero-variance columns (other than the intercept) carry no information
    // about their monomial; drop them and report them unidentifiable.
    std::vector<int> kept, dropped;
    for (int c = 0; c < m; ++c) {
        if (c == 0) { kept.push_back(c); continue; }
        double lo = d.x.col(c).minCoeff(), hi = d.x.col(c).maxCoeff();
        double scale = std::max({std::abs(lo), std::abs(hi), 1.0});
        if (hi - lo <= 1e-12 * scale) dropped.push_back(c);
        else kept.push_back(c);
    }

    Eigen::MatrixXd xk(n, static_cast<int>(kept.size()));
    for (int c = 0; c < static_cast<int>(kept.size()); ++c) xk.col(c) = d.x.col(kept[c]);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xk);
    qr.setThreshold(1e-10);
    int rank = static_cast<int>(qr.rank());
    if (rank < static_cast<int>(kept.size()) && config.ridge == 0.0) {
        std::vector<int> bad = dropped;
        auto perm = qr.colsPermutation().indices();
        for (int c = rank; c < static_cast<int>(kept.size()); ++c)
            bad.push_back(kept[perm(c)]);
        std::sort(bad.begin(), bad.end());
        std::string names;
        const auto& exps = monomial_exponents(config.order);
        for (int c : bad)
            names += " B_R^" + std::to_string(exps[c].first) +
                     " B_I^" + std::to_string(exps[c].second) + ";";
        throw DegenerateExcitationError(bad, "degenerate excitation: unidentifiable monomials:" + names);
    }

    Eigen::VectorXd gr_k, gi_k;
    if (config.ridge > 0.0) {
        // Normal-equations-sense ridge via row augmentation with sqrt(lambda) I.
        int p = static_cast<int>(kept.size());
        Eigen::MatrixXd aug(n + p, p);
        aug.topRows(n) = xk;
        aug.bottomRows(p) = std::sqrt(config.ridge) * Eigen::MatrixXd::Identity(p, p);
        Eigen::VectorXd tr = Eigen::VectorXd::Zero(n + p), ti = Eigen::VectorXd::Zero(n + p);
        tr.head(n) = d.target_r;
        ti.head(n) = d.target_i;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qra(aug);
        gr_k = qra.solve(tr);
        gi_k = qra.solve(ti);
    } else {
        gr_k = qr.solve(d.target_r);
        gi_k = qr.solve(d.target_i);
    }

    Eigen::VectorXd gr = Eigen::VectorXd::Zero(m), gi = Eigen::VectorXd::Zero(m);
    for (int c = 0; c < static_cast<int>(kept.size()); ++c) {
        gr(kept[c]) = gr_k(c);
        gi(kept[c]) = gi_k(c);
    }

    Eigen::VectorXd res_r = d.x * gr - d.target_r;
    Eigen::VectorXd res_i = d.x * gi - d.target_i;

    FitReport rep;
    rep.n_records = n;
    rep.unidentifiable = dropped;
    rep.rmse_r = std::sqrt(res_r.squaredNorm() / n);
    rep.rmse_i = std::sqrt(res_i.squaredNorm() / n);
    rep.max_abs_residual =
        std::max(res_r.cwiseAbs().maxCoeff(), res_i.cwiseAbs().maxCoeff());

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(xk);
    double smin = svd.singularValues()(svd.singularValues().size() - 1);
    double smax = svd.singularValues()(0);
    rep.condition_number = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();

    rep.tmpl.kind = config.kind;
    rep.tmpl.order = config.order;
    rep.tmpl.center = d.center;
    rep.tmpl.coeffs_r = shift_coefficients(config.order, gr, d.center, {0.0, 0.0});
    rep.tmpl.coeffs_i = shift_coefficients(config.order, gi, d.center, {0.0, 0.0});

    double rlo = records[0].v.re, rhi = rlo, ilo = records[0].v.im, ihi = ilo;
    bool first = true;
    for (const auto& r : records) {
        SplitPhasor b = independent_pair(r, config.kind);
        if (first) { rlo = rhi = b.re; ilo = ihi = b.im; first = false; }
        rlo = std::min(rlo, b.re); rhi = std::max(rhi, b.re);
        ilo = std::min(ilo, b.im); ihi = std::max(ihi, b.im);
    }
    rep.tmpl.range_r = {rlo, rhi};
    rep.tmpl.range_i = {ilo, ihi};
    return rep;
}

// ---------------------------------------------------------------------------
// Synthesis
// ---------------------------------------------------------------------------

SynthesisResult synthesize(const PhysicsModel& model, const SweepSpec& sweep) {
    SynthesisResult out;
    std::mt19937_64 rng(sweep.seed);
    std::normal_distribution<double> noise(0.0, sweep.noise_sigma > 0.0 ? sweep.noise_sigma : 1.0);

    std::vector<std::optional<double>> tags;
    if (sweep.tags.empty()) tags.push_back(std::nullopt);
    else for (double t : sweep.tags) tags.push_back(t);

    for (const auto& tag : tags) {
        for (double vi : sweep.im_points) {
            for (double vr : sweep.re_points) {
                SplitPhasor v{vr, vi};
                SplitPhasor i;
                try {
                    i = std::visit(
                        [&](const auto& dev) -> SplitPhasor {
                            using T = std::decay_t<decltype(dev)>;
                            if constexpr (std::is_same_v<T, PQLoad>) return pq_currents(dev, v);
                            else if constexpr (std::is_same_v<T, ZipLoad>) return zip_currents(dev, v);
                            else if constexpr (std::is_same_v<T, ExpLoad>) return exp_currents(dev, v);
                            else {
                                if (!tag) throw std::domain_error("induction machine sweep requires torque tags");
                                return im_currents(dev.params, *tag, v);
                            }
                        },
                        model);
                } catch (const TorqueCapabilityError&) { ++out.skipped; continue; }
                  catch (const VoltageCollapseError&) { ++out.skipped; continue; }
                if (sweep.noise_sigma > 0.0) {
                    i.re += noise(rng);
                    i.im += noise(rng);
                }
                out.records.push_back({v, i, tag, std::nullopt});
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

ValidationReport validate(const GlassTemplate& t,
                          std::span<const MeasurementRecord> records) {
    ValidationReport rep;
    if (records.empty()) return rep;
    double ss_r = 0.0, ss_i = 0.0;
    int n_extra = 0;
    for (const auto& r : records) {
        SplitPhasor b = independent_pair(r, t.kind);
        SplitPhasor a = dependent_pair(r, t.kind);
        SplitPhasor pred = evaluate(t, b);
        bool extra = false;
        if (t.range_r && (b.re < t.range_r->first || b.re > t.range_r->second)) extra = true;
        if (t.range_i && (b.im < t.range_i->first || b.im > t.range_i->second)) extra = true;
        n_extra += extra;
        double er = pred.re - a.re, ei = pred.im - a.im;
        ss_r += er * er;
        ss_i += ei * ei;
        rep.max_abs_residual = std::max({rep.max_abs_residual, std::abs(er), std::abs(ei)});
        rep.rows.push_back({r, pred, extra});
    }
    double n = static_cast<double>(records.size());
    rep.rmse_r = std::sqrt(ss_r / n);
    rep.rmse_i = std::sqrt(ss_i / n);
    rep.extrapolation_fraction = n_extra / n;
    return rep;
}

}  // namespace splitgrid
