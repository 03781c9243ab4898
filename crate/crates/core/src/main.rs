use std::io::Write;

use vlc_pathloss::cli::{run, Outcome};

fn main() {
    let mut stdout = std::io::stdout().lock();
    match run(std::env::args_os()) {
        Outcome::Help(text) => {
            let _ = write!(stdout, "{text}");
        }
        Outcome::Report { report, code } => {
            match serde_json::to_string_pretty(&report) {
                Ok(text) => {
                    let _ = writeln!(stdout, "{text}");
                }
                Err(e) => eprintln!("failed to serialize run report: {e}"),
            }
            let _ = stdout.flush();
            std::process::exit(code);
        }
    }
}
