//! Golden-file cases shared by the golden and acceptance tests. Arguments
//! are relative to the golden directory; `--out` and `--threads` are added
//! by the caller.

use std::path::{Path, PathBuf};

pub struct Case {
    pub name: &'static str,
    pub args: &'static [&'static str],
}

pub const CASES: &[Case] = &[
    Case {
        name: "moments_omega",
        args: &[
            "moments", "--fn", "omega", "--k", "1", "--n", "1000000", "--orders", "4", "--mode",
            "both",
        ],
    },
    Case {
        name: "moments_omega_diff",
        args: &[
            "moments",
            "--fn",
            "omega_diff",
            "--k",
            "4",
            "--l",
            "1",
            "--n",
            "100000",
            "--orders",
            "6",
        ],
    },
    Case {
        name: "moments_rule_config",
        args: &[
            "moments",
            "--config",
            "configs/log_p_over_p.ini",
            "--n",
            "20000",
        ],
    },
    Case {
        name: "simulate_omega",
        args: &[
            "simulate", "--fn", "omega", "--n", "100000", "--trials", "100000", "--seed", "42",
        ],
    },
    Case {
        name: "simulate_omega_diff",
        args: &[
            "simulate",
            "--fn",
            "omega_diff",
            "--n",
            "10000",
            "--trials",
            "1000",
            "--seed",
            "7",
        ],
    },
    Case {
        name: "limits_omega_normal",
        args: &[
            "limits", "--fn", "omega", "--n", "1000000", "--vs", "normal",
        ],
    },
    Case {
        name: "limits_kolmogorov_kfun",
        args: &[
            "limits",
            "--fn",
            "kolmogorov_example",
            "--params",
            "A=-1,C=1,mu=0.3,nu=0.3",
            "--n",
            "1000000",
            "--vs",
            "kfun",
        ],
    },
];

pub fn golden_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// File names in `dir`, sorted; empty if `dir` does not exist.
pub fn list_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map(|it| {
            it.filter_map(|e| e.ok())
                .filter(|e| e.path().is_file())
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .collect()
        })
        .unwrap_or_default();
    names.sort();
    names
}
