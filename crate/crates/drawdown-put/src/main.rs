use std::process::ExitCode;

fn main() -> ExitCode {
    drawdown_put::cli::main()
}
