use std::process::Command;

fn bench(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_bench"))
        .args(args)
        .output()
        .expect("bench runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

const SMALL: [&str; 8] = ["--expr", "1,5,10", "--sizes", "8,12", "--runs", "2", "--format", "csv"];

#[test]
fn csv_run_succeeds() {
    let (code, out, err) = bench(&SMALL);
    assert_eq!(code, 0, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "expr_id,size,mode,mean_seconds,flops,allocations,runs");
    assert_eq!(lines.len(), 1 + 3 * 2 * 2);
    assert!(lines[1].starts_with("1,8,naive,"));
    assert!(lines[2].starts_with("1,8,optimised,"));
}

#[test]
fn counters_are_deterministic() {
    let strip = |text: String| -> Vec<String> {
        text.lines()
            .skip(1)
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                format!("{},{},{},{},{},{}", f[0], f[1], f[2], f[4], f[5], f[6])
            })
            .collect()
    };
    let (_, a, _) = bench(&SMALL);
    let (_, b, _) = bench(&SMALL);
    assert_eq!(strip(a), strip(b));
}

#[test]
fn markdown_to_file() {
    let path = std::env::temp_dir().join(format!("lazylin-bench-{}.md", std::process::id()));
    let p = path.to_str().unwrap();
    let (code, out, err) = bench(&["--expr", "3", "--sizes", "16", "--runs", "1", "--out", p]);
    assert_eq!(code, 0, "{err}");
    assert!(out.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert!(text.contains("| size | naive (s) | optimised (s) | reduction |"), "{text}");
    assert!(text.contains("| 16 | "));
}

#[test]
fn single_arm_has_no_reduction() {
    let (code, out, _) = bench(&["--expr", "1", "--sizes", "8", "--runs", "1", "--mode", "naive"]);
    assert_eq!(code, 0);
    assert!(out.contains("| n/a | n/a |"), "{out}");
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["--expr", "11"][..],
        &["--expr", "1", "--sizes", "2"],
        &["--expr", "1", "--mode", "fast"],
        &["--expr", "1", "--format", "xml"],
        &["--expr", "1", "--runs", "0", "--sizes", "8"],
        &["--bogus"],
    ] {
        let (code, _, err) = bench(args);
        assert_eq!(code, 2, "{args:?}: {err}");
    }
}
