//! Exact identity suites run by `gramdiff verify`.
//!
//! Every check here is an algebraic statement evaluated in rational
//! arithmetic; a failure pinpoints the first offending degree, order or
//! entry. The suites cover: family equivalence of the kernels, the
//! moment/deadbeat identity, Gramian times closed-form inverse, the
//! diagonal-scaling reduction to the Hilbert matrix, the Hilbert inverse
//! formula, the window-reflection identity, and the weighted variants.

use crate::error::Result;
use crate::gramian::{
    gramian_entries, gramian_inverse_closed, hilbert_inverse, hilbert_matrix,
    scaling_reduces_to_hilbert, weighted_estimator_kernels, weighted_gramian, WeightSpec,
};
use crate::kernel::{
    equivalence_report, kernel_moment, moment_matrix, reflection_holds, KernelFamily, KernelPoly,
    KernelSpec,
};
use crate::rational::integer;
use crate::ratmat::lenmat_is_identity;

/// One row of the verification report.
#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &str, result: Result<std::result::Result<(), String>>) -> CheckOutcome {
    match result {
        Ok(Ok(())) => CheckOutcome {
            name: name.to_string(),
            passed: true,
            detail: "exact".to_string(),
        },
        Ok(Err(detail)) => CheckOutcome {
            name: name.to_string(),
            passed: false,
            detail,
        },
        Err(e) => CheckOutcome {
            name: name.to_string(),
            passed: false,
            detail: e.to_string(),
        },
    }
}

/// Runs every exact suite for model degrees up to `max_degree` (Hilbert
/// sizes up to `max_degree + 1`).
pub fn run_exact_suite(max_degree: usize) -> Vec<CheckOutcome> {
    vec![
        check_kernel_equivalence(max_degree),
        check_moments(KernelFamily::Algebraic, max_degree),
        check_moments(KernelFamily::Gramian, max_degree),
        check_gramian_inverse(max_degree),
        check_scaling_identity(max_degree),
        check_hilbert_identity(max_degree + 1),
        check_reflection(max_degree),
        check_weighted_reduction(max_degree),
        check_weighted_deadbeat(max_degree.min(6)),
    ]
}

fn check_kernel_equivalence(max_degree: usize) -> CheckOutcome {
    let run = || -> Result<std::result::Result<(), String>> {
        for n in 0..=max_degree {
            let report = equivalence_report(n);
            if let Some(v) = report.verdicts.iter().find(|v| !v.equal) {
                let m = v.mismatch.as_ref().expect("unequal verdict has a mismatch");
                return Ok(Err(format!(
                    "degree {n}, order {}: coefficient {} differs ({} vs {})",
                    v.order, m.index, m.left, m.right
                )));
            }
        }
        Ok(Ok(()))
    };
    outcome(
        &format!("kernel family equivalence (N <= {max_degree})"),
        run(),
    )
}

fn check_moments(family: KernelFamily, max_degree: usize) -> CheckOutcome {
    let run = || -> Result<std::result::Result<(), String>> {
        for n in 0..=max_degree {
            let m = moment_matrix(family, n)?;
            if !m.is_identity() {
                return Ok(Err(format!("moment matrix not identity at degree {n}")));
            }
        }
        Ok(Ok(()))
    };
    outcome(
        &format!(
            "moment identity, {} family (N <= {max_degree})",
            family.tag()
        ),
        run(),
    )
}

fn check_gramian_inverse(max_degree: usize) -> CheckOutcome {
    let run = || -> Result<std::result::Result<(), String>> {
        for n in 0..=max_degree {
            let w = gramian_entries(n, 0.0, 1.0)?;
            let winv = gramian_inverse_closed(n, 0.0, 1.0)?;
            let prod = w.multiply_exact(&winv)?;
            if !lenmat_is_identity(&prod, n + 1) {
                return Ok(Err(format!("W * Winv differs from identity at degree {n}")));
            }
        }
        Ok(Ok(()))
    };
    outcome(
        &format!("gramian x closed-form inverse (N <= {max_degree})"),
        run(),
    )
}

fn check_scaling_identity(max_degree: usize) -> CheckOutcome {
    let run = || -> Result<std::result::Result<(), String>> {
        for n in 0..=max_degree {
            if !scaling_reduces_to_hilbert(n)? {
                return Ok(Err(format!(
                    "L * M W M differs from the Hilbert matrix at degree {n}"
                )));
            }
        }
        Ok(Ok(()))
    };
    outcome(
        &format!("diagonal scaling to Hilbert (N <= {max_degree})"),
        run(),
    )
}

fn check_hilbert_identity(max_size: usize) -> CheckOutcome {
    let run = || -> Result<std::result::Result<(), String>> {
        for n in 1..=max_size.max(1) {
            if !hilbert_inverse(n).mul(&hilbert_matrix(n)).is_identity() {
                return Ok(Err(format!("Hinv * H differs from identity at size {n}")));
            }
        }
        Ok(Ok(()))
    };
    outcome(
        &format!("Hilbert inverse identity (n <= {max_size})"),
        run(),
    )
}

fn check_reflection(max_degree: usize) -> CheckOutcome {
    let run = || -> Result<std::result::Result<(), String>> {
        for n in 0..=max_degree {
            for j in 0..=n {
                let spec = KernelSpec::new(n, j, 1.0)?;
                if !reflection_holds(&spec) {
                    return Ok(Err(format!("reflection fails at degree {n}, order {j}")));
                }
            }
        }
        Ok(Ok(()))
    };
    outcome(
        &format!("window reflection identity (N <= {max_degree})"),
        run(),
    )
}

fn check_weighted_reduction(max_degree: usize) -> CheckOutcome {
    let run = || -> Result<std::result::Result<(), String>> {
        for n in 0..=max_degree {
            let plain = gramian_entries(n, 0.0, 1.0)?;
            let weighted = weighted_gramian(n, 0.0, 1.0, WeightSpec::none())?;
            if plain.entries() != weighted.entries() {
                return Ok(Err(format!(
                    "weighted Gramian at m = 0 differs at degree {n}"
                )));
            }
            let kernels = weighted_estimator_kernels(n, 1.0, WeightSpec::none())?;
            for (j, k) in kernels.kernels.iter().enumerate() {
                let spec = KernelSpec::new(n, j, 1.0)?;
                if k.coeffs() != KernelPoly::gramian(&spec).coeffs() {
                    return Ok(Err(format!(
                        "weighted kernel at m = 0 differs at degree {n}, order {j}"
                    )));
                }
            }
        }
        Ok(Ok(()))
    };
    outcome(
        &format!("weighted variants reduce at m = 0 (N <= {max_degree})"),
        run(),
    )
}

fn check_weighted_deadbeat(max_degree: usize) -> CheckOutcome {
    let run = || -> Result<std::result::Result<(), String>> {
        for m in 0..=3u32 {
            for n in 0..=max_degree {
                let kernels = weighted_estimator_kernels(n, 1.0, WeightSpec::new(m))?;
                for (j, kernel) in kernels.kernels.iter().enumerate() {
                    for k in 0..=n {
                        let want = if j == k { integer(1) } else { integer(0) };
                        if kernel_moment(kernel, k) != want {
                            return Ok(Err(format!(
                                "weighted moment fails at m = {m}, degree {n}, \
                                 order {j}, monomial {k}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(Ok(()))
    };
    outcome(
        &format!("weighted kernels stay deadbeat (m <= 3, N <= {max_degree})"),
        run(),
    )
}
