import os
import sys
import mod07

print(mod07)
