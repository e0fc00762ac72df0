//! Dual-action tables for the cyclic tower demo: dual metrics, spatial
//! isometry memberships with multiplication-operator witnesses, local
//! almost-isometry deviations, and covariant defect/reach tables.

use std::path::Path;

use serde::{Deserialize, Serialize};

use qcms::groups::{
    dual_metric_brackets, epsilon_iso_iso_check, left_invariance_defect, twisted_group_algebra,
    Cocycle, CocycleSpec, DualActionDemo, FinAbGroup, GroupDemoSpec, IsoIsoPair,
};
use qcms::isometry::iso_membership;
use qcms::linalg;
use qcms::metrics::engine::SolverOptions;
use qcms::metrics::Automorphism;
use qcms::tol::Profile;
use qcms::tunnels::{
    build_tn_tunnel, covariant_bridge_check, covariant_reach, ChainLevelData, CovariantData,
};

use crate::report::{self, CheckLine, CliError, TableRow};

#[derive(Deserialize)]
pub struct DualConfig {
    pub group: GroupDemoSpec,
    pub seed: u64,
}

#[derive(Serialize)]
struct DualReport {
    schema_version: u32,
    scenario: &'static str,
    seed: u64,
    p: usize,
    depth: usize,
    cocycle: String,
    detected_blocks: Option<Vec<usize>>,
    rows: Vec<TableRow>,
    deviations: Vec<DeviationLine>,
    checks: Vec<CheckLine>,
}

#[derive(Serialize)]
struct DeviationLine {
    from_level: usize,
    to_level: usize,
    condition_one: f64,
    condition_two: f64,
    max_deviation: f64,
    balls_whole_group: bool,
}

pub fn run(config: &Path, out: &Path, seed: Option<u64>, _profile: Profile) -> Result<bool, CliError> {
    let cfg: DualConfig = report::read_config(config)?;
    report::ensure_out_dir(out)?;
    let seed = seed.unwrap_or(cfg.seed);
    let mut rows: Vec<TableRow> = Vec::new();
    let mut checks: Vec<CheckLine> = Vec::new();
    let mut deviations: Vec<DeviationLine> = Vec::new();
    let mut detected_blocks = None;

    if cfg.group.cocycle == CocycleSpec::Symplectic {
        // Single-stage algebra detection for the square group.
        let group = FinAbGroup { factors: vec![cfg.group.p, cfg.group.p] };
        let sigma = Cocycle::symplectic(&group)?;
        let twisted = twisted_group_algebra(&group, &sigma)?;
        let blocks = twisted.algebra.blocks.clone();
        checks.push(CheckLine::new(
            "symplectic_twist_is_full_matrix_block",
            blocks == vec![cfg.group.p],
            format!("detected blocks {blocks:?}"),
        ));
        detected_blocks = Some(blocks);
        let all = report::print_summary("dual-action", &checks);
        let rep = DualReport {
            schema_version: report::SCHEMA_VERSION,
            scenario: "dual_action",
            seed,
            p: cfg.group.p,
            depth: cfg.group.depth,
            cocycle: "symplectic".into(),
            detected_blocks,
            rows,
            deviations,
            checks,
        };
        report::write_csv(&out.join("dual_action.csv"), &[])?;
        report::write_json(&out.join("dual_action.json"), &rep)?;
        return Ok(all);
    }

    let demo = DualActionDemo::build(&cfg.group)?;
    let opts = SolverOptions::with_seed(seed);
    let n_top = demo.group.order();

    // Exact commutation of the multiplication unitaries with the Dirac, and
    // membership of every dual action in the spatial isometry group.
    let mut exact_comm = true;
    let mut members = true;
    for k in 0..n_top {
        let da = demo.dual_action_top(k)?;
        let comm = &demo.triple.dirac * &da.unitary - &da.unitary * &demo.triple.dirac;
        exact_comm &= comm.iter().all(|z| z.re == 0.0 && z.im == 0.0);
        let dec = iso_membership(&da.automorphism, &demo.triple, None)?;
        members &= dec.member;
    }
    checks.push(CheckLine::new("dirac_commutes_with_multipliers_exactly", exact_comm, format!("{n_top} characters")));
    checks.push(CheckLine::new("dual_actions_accepted_into_spatial_isometries", members, format!("{n_top} characters")));

    // Dual metrics per level and the induced local almost-isometry data.
    let mut dual_groups = Vec::new();
    for level in 1..demo.levels.len() {
        let brackets = dual_metric_brackets(&demo, level, &opts)?;
        for (i, j, v) in &brackets {
            rows.push(TableRow {
                level,
                quantity: format!("dual_metric_{i}_{j}"),
                lower: v.lower,
                upper: v.upper,
                certified_bound: None,
                seed,
            });
        }
        let report = demo.dual_group_metric(level, &opts)?;
        checks.push(CheckLine::new(
            format!("dual_metric_level_{level}_left_invariant"),
            left_invariance_defect(&report) <= 2.0 * report.max_gap + 1e-9,
            format!("defect {:.3e}, max gap {:.3e}", left_invariance_defect(&report), report.max_gap),
        ));
        dual_groups.push(report.group);
    }
    // Canonical quotient/section deviations between consecutive dual levels.
    for w in dual_groups.windows(2) {
        let small = &w[0];
        let big = &w[1];
        let m = small.order();
        let f: Vec<usize> = (0..big.order()).map(|x| x % m).collect();
        let xi: Vec<usize> = (0..m).collect();
        let rmax = big.diameter().max(small.diameter()) + 1.0;
        let pair = IsoIsoPair::new(big, small, f, xi, rmax, 1.0)
            .map_err(|e| CliError::Run(e.to_string()))?;
        let dev = epsilon_iso_iso_check(&pair, big, small);
        deviations.push(DeviationLine {
            from_level: small.order(),
            to_level: big.order(),
            condition_one: dev.condition_one,
            condition_two: dev.condition_two,
            max_deviation: dev.max_deviation,
            balls_whole_group: dev.balls_whole_group,
        });
    }

    // Covariant defect and reach per level, through the reduction route.
    for level in 1..demo.levels.len() {
        let lvl = &demo.levels[level];
        let data = ChainLevelData {
            top: &demo.qcms,
            level: &lvl.qcms,
            inclusion: lvl.inclusion.clone(),
            expectation: lvl.expectation.clone(),
        };
        let m = lvl.sub_elements.len();
        let cov = CovariantData {
            top_actions: (0..n_top)
                .map(|k| demo.dual_action_top(k).map(|d| d.automorphism))
                .collect::<Result<_, _>>()?,
            level_actions: (0..n_top)
                .map(|k| demo.dual_action_level(level, k % m).map(|d| d.automorphism))
                .collect::<Result<_, _>>()?,
            balls_whole_group: true,
            exact_section: true,
        };
        let pi = Automorphism::identity(demo.qcms.algebra());
        let rep = covariant_bridge_check(&data, &pi, &cov, None, None, &opts)?;
        rows.push(TableRow::from_value(level, &rep.plain.defect_forward, None));
        rows.push(TableRow::from_value(level, &rep.covariant_forward, None));
        checks.push(CheckLine::new(
            format!("covariant_defect_level_{level}_reduces_to_plain"),
            rep.reduced
                && (rep.covariant_forward.upper - rep.plain.defect_forward.upper).abs() <= 1e-10,
            format!(
                "reduced {}, commutation {:.3e}, restriction {:.3e}",
                rep.reduced, rep.commutation_residual, rep.restriction_residual
            ),
        ));
        let eps = rep.plain.defect_forward.upper.max(1e-7);
        let tunnel = build_tn_tunnel(&data, &pi, eps, Some(&cov))?;
        let reach = covariant_reach(&tunnel, &opts)?;
        rows.push(TableRow::from_value(level, &reach, Some(2.0 * eps)));
    }

    // Restriction compatibility of the dual actions.
    let mut worst_restriction = 0.0f64;
    for level in 1..demo.levels.len() {
        for k in 0..n_top {
            worst_restriction = worst_restriction.max(demo.restriction_residual(level, k)?);
        }
    }
    checks.push(CheckLine::new(
        "dual_actions_restrict_along_the_tower",
        worst_restriction <= 1e-10,
        format!("worst residual {worst_restriction:.3e}"),
    ));

    let all = report::print_summary("dual-action", &checks);
    report::write_csv(&out.join("dual_action.csv"), &rows)?;
    let rep = DualReport {
        schema_version: report::SCHEMA_VERSION,
        scenario: "dual_action",
        seed,
        p: cfg.group.p,
        depth: cfg.group.depth,
        cocycle: "trivial".into(),
        detected_blocks,
        rows,
        deviations,
        checks,
    };
    report::write_json(&out.join("dual_action.json"), &rep)?;
    let _ = linalg::identity(1);
    Ok(all)
}
