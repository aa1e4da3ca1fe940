import os
import sys

from dotenv import load_dotenv

# Load the profile selector (DUPLEX_ENV) from instance/.env if present
load_dotenv(os.path.join("instance", ".env"))

from duplex_kit.cli import run_command  # noqa: E402

if __name__ == "__main__":
    sys.exit(run_command(sys.argv[1:]))
