import os
import sys
import mod04

print(mod04)
