//! The worked 2x2-matrix example: kernel verification, the certified full
//! quantum isometry, and the spatial-isometry rejection.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::Serialize;

use qcms::dirac::{explicit_triple, m2_example_triple};
use qcms::finalg::AlgebraElement;
use qcms::isometry::{bilip_constants, iso_membership, IsometryVerdict};
use qcms::linalg;
use qcms::metrics::{Automorphism, Qcms};
use qcms::seminorm::{kernel_check, LipSeminorm};
use qcms::tol::Profile;

use crate::report::{self, CheckLine, CliError};

#[derive(Serialize)]
struct M2Report {
    schema_version: u32,
    scenario: &'static str,
    seed: u64,
    perturbed: bool,
    kernel_dim: usize,
    lip_of_sign_involution: f64,
    bilip_k_lower: f64,
    bilip_verdict: String,
    iso_adj_member: bool,
    iso_adj_intertwiner_dim: usize,
    iso_id_member: bool,
    checks: Vec<CheckLine>,
}

pub fn run(out: &Path, seed: u64, profile: Profile, perturb: bool) -> Result<bool, CliError> {
    report::ensure_out_dir(out)?;
    let base = m2_example_triple()?;
    let triple = if perturb {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let noise = linalg::gaussian_hermitian(&mut rng, 4) * C64::new(1e-3, 0.0);
        explicit_triple(&base.algebra, base.rep_basis.clone(), &base.dirac + noise)?
    } else {
        base
    };
    let triple = Arc::new(triple);
    let lip = LipSeminorm::with_tracial_basepoint(triple.clone())?;
    let (kernel_dim, _) = kernel_check(&lip);
    let qcms = Qcms::new(lip)?;

    let mut j = AlgebraElement::zero(&triple.algebra);
    j.data[0][(0, 0)] = C64::new(1.0, 0.0);
    j.data[0][(1, 1)] = C64::new(-1.0, 0.0);
    let lip_j = qcms.lip.eval(&j);
    let adj = Automorphism::inner(&j)?;
    let bilip = bilip_constants(&adj, &qcms, 10, seed)?;
    let dec_adj = iso_membership(&adj, &triple, None)?;
    let id = Automorphism::identity(&triple.algebra);
    let dec_id = iso_membership(&id, &triple, None)?;

    let tol = 1e-9 * profile.scale().max(1.0) + 1e-9 * profile.scale();
    let checks = vec![
        CheckLine::new("kernel_is_scalars", kernel_dim == 1, format!("kernel dim {kernel_dim}")),
        CheckLine::new(
            "lip_of_sign_involution",
            (lip_j - 2.0).abs() <= tol.max(1e-9),
            format!("L(J) = {lip_j:.12}"),
        ),
        CheckLine::new(
            "ad_j_full_quantum_isometry_certified",
            bilip.verdict == IsometryVerdict::Certified,
            format!("verdict {:?}, K_lower {:.12}", bilip.verdict, bilip.k_lower),
        ),
        CheckLine::new(
            "ad_j_rejected_from_spatial_isometries",
            !dec_adj.member,
            format!("member {}, intertwiner dim {}", dec_adj.member, dec_adj.intertwiner_space_dim),
        ),
        CheckLine::new(
            "identity_accepted",
            dec_id.member,
            format!("member {}, residual {:.3e}", dec_id.member, dec_id.residual),
        ),
    ];
    let all = report::print_summary("example-m2", &checks);
    let rep = M2Report {
        schema_version: report::SCHEMA_VERSION,
        scenario: "m2_example",
        seed,
        perturbed: perturb,
        kernel_dim,
        lip_of_sign_involution: lip_j,
        bilip_k_lower: bilip.k_lower,
        bilip_verdict: format!("{:?}", bilip.verdict),
        iso_adj_member: dec_adj.member,
        iso_adj_intertwiner_dim: dec_adj.intertwiner_space_dim,
        iso_id_member: dec_id.member,
        checks,
    };
    report::write_json(&out.join("m2_example.json"), &rep)?;
    Ok(all)
}
