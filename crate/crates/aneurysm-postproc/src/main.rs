use std::process::ExitCode;

fn main() -> ExitCode {
    aneurysm_postproc::cli::main()
}
